#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tegee/tensor.hpp"

namespace tegee {

// name -> (rows, cols) of the host matrices an adapter may target.
using ShapeTable = std::map<std::string, std::pair<std::size_t, std::size_t>>;

struct AdapterSpec {
  std::vector<std::string> targets{"q_proj", "k_proj"};
  std::size_t rank = 4;

  void validate(const ShapeTable& shapes) const {
    if (rank == 0) throw spec_error("adapter rank must be positive");
    if (targets.empty()) throw spec_error("adapter needs at least one target");
    for (std::size_t i = 0; i < targets.size(); ++i) {
      for (std::size_t j = i + 1; j < targets.size(); ++j)
        if (targets[i] == targets[j]) throw spec_error("duplicate adapter target " + targets[i]);
      auto it = shapes.find(targets[i]);
      if (it == shapes.end()) throw target_error("unknown adapter target " + targets[i]);
      if (rank > std::min(it->second.first, it->second.second))
        throw spec_error("rank exceeds target dimensions for " + targets[i]);
    }
  }

  bool operator==(const AdapterSpec& o) const {
    return targets == o.targets && rank == o.rank;
  }
};

// Per-target factor pair; delta(target) = B * A with B d x r and A r x k.
struct Adapter {
  struct Factors {
    Tensor B;
    Tensor A;
  };
  AdapterSpec spec;
  std::map<std::string, Factors> factors;

  bool has(const std::string& target) const { return factors.count(target) != 0; }

  const Factors& at(const std::string& target) const {
    auto it = factors.find(target);
    if (it == factors.end()) throw target_error("unknown adapter target " + target);
    return it->second;
  }

  std::size_t trainable_parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, f] : factors) n += f.B.size() + f.A.size();
    return n;
  }

  bool operator==(const Adapter& o) const {
    if (!(spec == o.spec) || factors.size() != o.factors.size()) return false;
    for (const auto& [name, f] : factors) {
      auto it = o.factors.find(name);
      if (it == o.factors.end() || !(f.B == it->second.B) || !(f.A == it->second.A))
        return false;
    }
    return true;
  }
};

// A gaussian, B zero: the delta starts at exactly zero, so a fresh adapter is
// a no-op on the forward pass.
inline Adapter init_adapter(const AdapterSpec& spec, const ShapeTable& shapes, Rng& rng) {
  spec.validate(shapes);
  Adapter ad;
  ad.spec = spec;
  for (const auto& name : spec.targets) {
    const auto [d, k] = shapes.at(name);
    Adapter::Factors f;
    f.B = Tensor::zeros(d, spec.rank);
    f.A = Tensor::gaussian(spec.rank, k, 0.02, rng);
    ad.factors.emplace(name, std::move(f));
  }
  return ad;
}

inline Tensor delta(const Adapter& ad, const std::string& target) {
  const auto& f = ad.at(target);
  return matmul(f.B, f.A);
}

// Scales B only, so delta scales exactly by c.
inline Adapter scale_adapter(const Adapter& ad, double c) {
  if (!std::isfinite(c)) throw contract_error("scale_adapter: factor must be finite");
  Adapter out = ad;
  for (auto& [name, f] : out.factors) f.B = scale(f.B, c);
  return out;
}

namespace detail {

inline void write_doubles(std::ostream& os, const Tensor& t) {
  os.write(reinterpret_cast<const char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(double)));
}

inline void read_doubles(std::istream& is, Tensor& t) {
  is.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  if (!is) throw format_error("truncated tensor payload", static_cast<std::size_t>(is.tellg() == -1 ? 0 : is.tellg()));
}

inline std::string read_line(std::istream& is, const char* what) {
  std::string line;
  if (!std::getline(is, line))
    throw format_error(std::string("missing ") + what,
                       static_cast<std::size_t>(is.tellg() == -1 ? 0 : is.tellg()));
  return line;
}

}  // namespace detail

// Text header (magic, rank, targets with shapes) followed by little-endian
// 64-bit float payloads, B then A per target in header order.
inline void save_adapter(std::ostream& os, const Adapter& ad) {
  os << "tegee-adapter v1\n";
  os << "rank " << ad.spec.rank << "\n";
  os << "targets " << ad.spec.targets.size() << "\n";
  for (const auto& name : ad.spec.targets) {
    const auto& f = ad.at(name);
    os << name << " " << f.B.rows() << " " << f.A.cols() << "\n";
  }
  os << "end\n";
  for (const auto& name : ad.spec.targets) {
    const auto& f = ad.at(name);
    detail::write_doubles(os, f.B);
    detail::write_doubles(os, f.A);
  }
}

inline Adapter load_adapter(std::istream& is) {
  auto offset = [&is]() {
    auto p = is.tellg();
    return p == std::istream::pos_type(-1) ? std::size_t(0) : static_cast<std::size_t>(p);
  };
  if (detail::read_line(is, "magic") != "tegee-adapter v1")
    throw format_error("bad adapter magic", 0);
  Adapter ad;
  {
    std::istringstream ss(detail::read_line(is, "rank"));
    std::string key;
    if (!(ss >> key >> ad.spec.rank) || key != "rank")
      throw format_error("bad rank line", offset());
  }
  std::size_t ntargets = 0;
  {
    std::istringstream ss(detail::read_line(is, "targets"));
    std::string key;
    if (!(ss >> key >> ntargets) || key != "targets" || ntargets == 0)
      throw format_error("bad targets line", offset());
  }
  ad.spec.targets.clear();
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  for (std::size_t i = 0; i < ntargets; ++i) {
    std::istringstream ss(detail::read_line(is, "target shape"));
    std::string name;
    std::size_t d = 0, k = 0;
    if (!(ss >> name >> d >> k) || d == 0 || k == 0)
      throw format_error("bad target shape line", offset());
    ad.spec.targets.push_back(name);
    shapes.emplace_back(d, k);
  }
  if (detail::read_line(is, "end marker") != "end")
    throw format_error("missing end marker", offset());
  for (std::size_t i = 0; i < ntargets; ++i) {
    Adapter::Factors f;
    f.B = Tensor(shapes[i].first, ad.spec.rank);
    f.A = Tensor(ad.spec.rank, shapes[i].second);
    detail::read_doubles(is, f.B);
    detail::read_doubles(is, f.A);
    ad.factors.emplace(ad.spec.targets[i], std::move(f));
  }
  return ad;
}

inline void save_adapter_file(const std::string& path, const Adapter& ad) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw format_error("cannot open adapter file for writing: " + path, 0);
  save_adapter(os, ad);
}

inline Adapter load_adapter_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw format_error("cannot open adapter file: " + path, 0);
  return load_adapter(is);
}

}  // namespace tegee
