#include "avse/nn/checkpoint.h"

#include <cctype>
#include <fstream>
#include <sstream>

#include "avse/core/error.h"
#include "avse/core/tnsr.h"

namespace avse::nn {

namespace fs = std::filesystem;

namespace {

std::string FileNameFor(const std::string& name) {
  std::string f;
  for (char c : name) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
    f += ok ? c : '_';
  }
  return f + ".tnsr";
}

Dims ParseDims(const std::string& s, const std::string& where) {
  Dims d;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    try {
      std::size_t used = 0;
      int v = std::stoi(part, &used);
      if (used != part.size() || v <= 0) throw std::invalid_argument(part);
      d.push_back(v);
    } catch (const std::exception&) {
      throw Error(where + ": bad dims '" + s + "'");
    }
  }
  if (d.empty()) throw Error(where + ": empty dims");
  return d;
}

}  // namespace

const Tensor* Checkpoint::Find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

void SaveCheckpoint(const fs::path& dir, const Checkpoint& ckpt) {
  fs::create_directories(dir);
  std::ostringstream index;
  for (const auto& [k, v] : ckpt.header) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
      throw Error("checkpoint header entry '" + k + "' contains a reserved character");
    index << '@' << k << '=' << v << '\n';
  }
  for (const auto& [name, t] : ckpt.tensors) {
    if (name.find_first_of(" \t\n") != std::string::npos)
      throw Error("checkpoint tensor name '" + name + "' contains whitespace");
    const std::string file = FileNameFor(name);
    WriteTnsrFile(dir / file, t);
    index << name << ' ' << t.ShapeString() << ' ' << file << '\n';
  }
  std::ofstream os(dir / kCheckpointIndex, std::ios::binary);
  if (!os) throw Error("cannot write " + (dir / kCheckpointIndex).string());
  os << index.str();
  if (!os) throw Error("write failed: " + (dir / kCheckpointIndex).string());
}

Checkpoint LoadCheckpoint(const fs::path& dir) {
  const fs::path ipath = dir / kCheckpointIndex;
  std::ifstream is(ipath);
  if (!is) throw Error("no checkpoint index at " + ipath.string());
  Checkpoint ckpt;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string where = ipath.string() + ":" + std::to_string(lineno);
    if (line.empty()) continue;
    if (line[0] == '@') {
      auto eq = line.find('=');
      if (eq == std::string::npos) throw Error(where + ": header line without '='");
      ckpt.header[line.substr(1, eq - 1)] = line.substr(eq + 1);
      continue;
    }
    std::istringstream ls(line);
    std::string name, dims, file, extra;
    if (!(ls >> name >> dims >> file) || (ls >> extra))
      throw Error(where + ": expected 'name dims file'");
    Tensor t = ReadTnsrFile(dir / file);
    if (t.dims() != ParseDims(dims, where))
      throw Error(where + ": " + file + " has dims " + t.ShapeString() + ", index says " + dims);
    ckpt.tensors.emplace_back(name, std::move(t));
  }
  return ckpt;
}

void AppendParameters(Checkpoint& ckpt, const std::vector<Parameter<float>*>& params,
                      const std::string& prefix) {
  for (const Parameter<float>* p : params) ckpt.tensors.emplace_back(prefix + p->name, p->value);
}

void RestoreParameters(const Checkpoint& ckpt, const std::vector<Parameter<float>*>& params,
                       const std::string& prefix) {
  for (Parameter<float>* p : params) {
    const Tensor* t = ckpt.Find(prefix + p->name);
    if (!t) throw Error("checkpoint is missing tensor '" + prefix + p->name + "'");
    if (t->dims() != p->value.dims())
      throw Error("checkpoint tensor '" + prefix + p->name + "' has dims " + t->ShapeString() +
                  ", model expects " + p->value.ShapeString());
    RequireFinite(*t, "checkpoint tensor " + prefix + p->name);
    p->value = *t;
  }
}

}  // namespace avse::nn
