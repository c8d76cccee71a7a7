#include "dreptile/param_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "dreptile/errors.hpp"

namespace dreptile {

void write_params(std::ostream& out, const SavedParams& saved) {
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(saved.registry_hash));
  out << "dreptile-params 1\n"
      << "model " << saved.model << '\n'
      << "registry_hash " << hash << '\n'
      << "length " << saved.params.size() << '\n';
  char buf[64];
  for (double v : saved.params) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf << '\n';
  }
  if (!out) throw DataError("write_params: stream failure");
}

SavedParams read_params(std::istream& in) {
  auto expect = [&](const std::string& key) {
    std::string line;
    if (!std::getline(in, line) || line.rfind(key + " ", 0) != 0) {
      throw DataError("read_params: expected '" + key + "' header line");
    }
    return line.substr(key.size() + 1);
  };
  if (expect("dreptile-params") != "1") throw DataError("read_params: unsupported version");
  SavedParams out;
  out.model = expect("model");
  const std::string hash = expect("registry_hash");
  const std::string length = expect("length");
  std::size_t n = 0;
  try {
    out.registry_hash = std::stoull(hash, nullptr, 16);
    n = std::stoull(length);
  } catch (const std::exception&) {
    throw DataError("read_params: malformed header");
  }
  std::vector<double> values;
  values.reserve(n);
  std::string line;
  while (values.size() < n && std::getline(in, line)) {
    try {
      values.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw DataError("read_params: bad value on data line " + std::to_string(values.size() + 1));
    }
  }
  if (values.size() != n) throw DataError("read_params: truncated file");
  out.params = ParamVector(std::move(values));
  if (!out.params.all_finite()) throw DataError("read_params: non-finite value");
  return out;
}

void save_params(const std::string& path, const SavedParams& saved) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open " + path + " for writing");
  write_params(f, saved);
}

SavedParams load_params(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  return read_params(f);
}

}  // namespace dreptile
