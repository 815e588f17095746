#pragma once

#include <string>
#include <utility>
#include <vector>

#include "regionblend/denoiser.hpp"
#include "regionblend/tensor.hpp"

namespace regionblend {

// Flat little-endian float32 stream preceded by a text header listing tensor
// names and shapes in fixed order:
//
//   RBCK1
//   tensor <name> <n> <c> <h> <w>
//   ...
//   end
//   <raw float32 data in header order>
using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

void save_tensors(const NamedTensors& tensors, const std::string& path);
NamedTensors load_tensors(const std::string& path);

void save_checkpoint(const Denoiser& model, const std::string& path);
void load_checkpoint(Denoiser& model, const std::string& path);

// Single-tensor convenience used for latent files.
void save_latent(const Tensor& z, const std::string& path);
Tensor load_latent(const std::string& path);

}  // namespace regionblend
