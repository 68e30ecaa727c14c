#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "liftcg/compressor.hpp"
#include "liftcg/error.hpp"

namespace liftcg {

std::string quantize(double v, int digits) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0 || std::fabs(v) < 1e-300) return "0";

  // Print 41 significant digits and round by hand: digit `digits + 1` alone
  // decides the direction when ties go away from zero. printf's own rounding
  // would send exact ties to even. A double sits at least ~1e-29 (relative)
  // from any 18-digit midpoint it is not equal to, so 41 digits never round
  // across one.
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.40e", std::fabs(v));
  char mantissa[41];
  int m = 0;
  const char* p = buf;
  for (; *p != 'e'; ++p) {
    if (*p != '.') mantissa[m++] = *p;
  }
  int exponent = std::atoi(p + 1);

  char out[20];
  for (int i = 0; i < digits; ++i) out[i] = mantissa[i];
  if (digits < m && mantissa[digits] >= '5') {
    int i = digits - 1;
    while (i >= 0 && out[i] == '9') out[i--] = '0';
    if (i >= 0) {
      ++out[i];
    } else {
      out[0] = '1';
      ++exponent;
    }
  }

  std::string s;
  s.reserve(static_cast<std::size_t>(digits) + 8);
  if (v < 0) s.push_back('-');
  s.append(out, out + digits);
  s.push_back('e');
  s += std::to_string(exponent);
  return s;
}

std::vector<Tensor> sample_weights(std::span<const Tensor> shapes, Rng& rng) {
  std::vector<Tensor> w(shapes.begin(), shapes.end());
  for (std::size_t l = 0; l < w.size(); ++l) {
    if (l == kIdentityLabel) {
      w[l] = Tensor::scalar(1.0);
      continue;
    }
    for (double& x : w[l].data) x = rng.uniform(-1.0, 1.0);
  }
  return w;
}

FingerprintTable fingerprint(const ComputationGraph& g, std::span<const Tensor> shapes, const FingerprintParams& params) {
  if (params.inits < 1) throw Error(ErrorCode::InvalidArgument, "fingerprint needs at least one initialization");
  if (params.digits < 1 || params.digits > 17) throw Error(ErrorCode::InvalidArgument, "digits must lie in 1..17");

  FingerprintTable table;
  table.params = params;
  table.keys.assign(g.node_count(), std::string{});
  table.dims.assign(g.node_count(), 0);

  Rng rng(splitmix64(params.seed));
  for (int i = 0; i < params.inits; ++i) {
    const auto weights = sample_weights(shapes, rng);
    const NodeValues values = evaluate(g, weights);
    for (NodeId id = 0; id < g.node_count(); ++id) {
      std::string& key = table.keys[id];
      if (i > 0) key.push_back(';');
      const auto v = values[id];
      for (std::size_t c = 0; c < v.size(); ++c) {
        if (c > 0) key.push_back(',');
        key += quantize(v[c], params.digits);
      }
      table.dims[id] = static_cast<std::uint32_t>(v.size());
    }
  }
  return table;
}

}  // namespace liftcg
