#include "regionblend/checkpoint.hpp"

#include <fstream>
#include <sstream>

namespace regionblend {

void save_tensors(const NamedTensors& tensors, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "RBCK1\n";
  for (const auto& [name, t] : tensors)
    out << "tensor " << name << ' ' << t.n << ' ' << t.c << ' ' << t.h << ' ' << t.w << '\n';
  out << "end\n";
  for (const auto& [name, t] : tensors)
    out.write(reinterpret_cast<const char*>(t.v.data()),
              std::streamsize(t.v.size() * sizeof(float)));
  if (!out) throw IoError("write failed: " + path);
}

NamedTensors load_tensors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "RBCK1") throw IoError("bad checkpoint magic: " + path);

  NamedTensors tensors;
  while (std::getline(in, line)) {
    if (line == "end") break;
    std::istringstream ls(line);
    std::string kw, name;
    int n, c, h, w;
    if (!(ls >> kw >> name >> n >> c >> h >> w) || kw != "tensor")
      throw IoError("bad checkpoint header line: " + line);
    tensors.emplace_back(name, Tensor(n, c, h, w));
  }
  for (auto& [name, t] : tensors) {
    in.read(reinterpret_cast<char*>(t.v.data()), std::streamsize(t.v.size() * sizeof(float)));
    if (!in) throw IoError("truncated checkpoint data: " + path);
  }
  return tensors;
}

void save_checkpoint(const Denoiser& model, const std::string& path) {
  NamedTensors tensors;
  for (const auto& p : model.params()) tensors.emplace_back(p.name, p.w);
  save_tensors(tensors, path);
}

void load_checkpoint(Denoiser& model, const std::string& path) {
  NamedTensors tensors = load_tensors(path);
  auto& params = model.params();
  if (tensors.size() != params.size()) throw IoError("checkpoint tensor count mismatch: " + path);
  for (size_t i = 0; i < params.size(); ++i) {
    auto& [name, t] = tensors[i];
    if (name != params[i].name || !t.same_shape(params[i].w))
      throw IoError("checkpoint tensor mismatch at " + params[i].name);
    params[i].w = std::move(t);
  }
}

void save_latent(const Tensor& z, const std::string& path) {
  save_tensors({{"latent", z}}, path);
}

Tensor load_latent(const std::string& path) {
  NamedTensors tensors = load_tensors(path);
  if (tensors.size() != 1 || tensors[0].first != "latent")
    throw IoError("not a latent file: " + path);
  return std::move(tensors[0].second);
}

}  // namespace regionblend
