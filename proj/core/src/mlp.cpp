#include "resprect/mlp.hpp"

#include <cmath>
#include <sstream>

#include "resprect/errors.hpp"

namespace resprect {

Tensor& ParamSet::at(std::string_view name) {
  for (auto& e : entries) {
    if (e.name == name) return e.value;
  }
  throw DimensionError("ParamSet: no parameter named '" + std::string(name) +
                       "' in " + arch_tag);
}

const Tensor& ParamSet::at(std::string_view name) const {
  for (const auto& e : entries) {
    if (e.name == name) return e.value;
  }
  throw DimensionError("ParamSet: no parameter named '" + std::string(name) +
                       "' in " + arch_tag);
}

bool ParamSet::has(std::string_view name) const {
  for (const auto& e : entries) {
    if (e.name == name) return true;
  }
  return false;
}

std::size_t ParamSet::total_size() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.value.size();
  return n;
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (entries.size() != other.entries.size()) return false;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].name != other.entries[i].name) return false;
    if (entries[i].value.dims != other.entries[i].value.dims) return false;
  }
  return true;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  out.arch_tag = arch_tag;
  out.entries.reserve(entries.size());
  for (const auto& e : entries) {
    out.entries.push_back({e.name, Tensor(e.value.dims)});
  }
  return out;
}

std::string mlp_arch_tag(MlpDims d) {
  std::ostringstream os;
  os << "mlp(in=" << d.in << ",hidden=" << d.hidden << ",out=" << d.out << ")";
  return os.str();
}

namespace {

Tensor uniform_tensor(std::vector<std::size_t> shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (float& v : t.data) {
    v = static_cast<float>(rng.uniform(-bound, bound));
  }
  return t;
}

}  // namespace

ParamSet mlp_init(MlpDims d, Rng& rng, bool zero_head) {
  if (d.in == 0 || d.hidden == 0 || d.out == 0) {
    throw DimensionError("mlp_init: all dims must be positive");
  }
  ParamSet p;
  p.arch_tag = mlp_arch_tag(d);
  const double b1 = 1.0 / std::sqrt(static_cast<double>(d.in));
  const double b2 = 1.0 / std::sqrt(static_cast<double>(d.hidden));
  p.entries.push_back({"w1", uniform_tensor({d.in, d.hidden}, b1, rng)});
  p.entries.push_back({"b1", uniform_tensor({d.hidden}, b1, rng)});
  p.entries.push_back({"w2", uniform_tensor({d.hidden, d.hidden}, b2, rng)});
  p.entries.push_back({"b2", uniform_tensor({d.hidden}, b2, rng)});
  if (zero_head) {
    p.entries.push_back({"w3", Tensor({d.hidden, d.out})});
    p.entries.push_back({"b3", Tensor({d.out})});
  } else {
    p.entries.push_back({"w3", uniform_tensor({d.hidden, d.out}, b2, rng)});
    p.entries.push_back({"b3", uniform_tensor({d.out}, b2, rng)});
  }
  return p;
}

MlpDims mlp_dims(const ParamSet& p) {
  static const char* names[] = {"w1", "b1", "w2", "b2", "w3", "b3"};
  if (p.entries.size() != 6) {
    throw DimensionError("mlp_dims: expected 6 parameters, got " +
                         std::to_string(p.entries.size()));
  }
  for (std::size_t i = 0; i < 6; ++i) {
    if (p.entries[i].name != names[i]) {
      throw DimensionError("mlp_dims: unexpected parameter order in " +
                           p.arch_tag);
    }
  }
  const Tensor& w1 = p.entries[0].value;
  const Tensor& w2 = p.entries[2].value;
  const Tensor& w3 = p.entries[4].value;
  if (w1.rank() != 2 || w2.rank() != 2 || w3.rank() != 2) {
    throw DimensionError("mlp_dims: weights must be rank-2");
  }
  MlpDims d{w1.dims[0], w1.dims[1], w3.dims[1]};
  if (w2.dims[0] != d.hidden || w2.dims[1] != d.hidden ||
      w3.dims[0] != d.hidden || p.entries[1].value.size() != d.hidden ||
      p.entries[3].value.size() != d.hidden ||
      p.entries[5].value.size() != d.out) {
    throw DimensionError("mlp_dims: inconsistent layer shapes in " +
                         p.arch_tag);
  }
  if (!p.arch_tag.empty() && p.arch_tag != mlp_arch_tag(d)) {
    throw DimensionError("mlp_dims: arch tag '" + p.arch_tag +
                         "' disagrees with shapes " + mlp_arch_tag(d));
  }
  return d;
}

namespace {

void relu_inplace(Tensor& t) {
  for (float& v : t.data) {
    if (v < 0.0f) v = 0.0f;
  }
}

/// dst = upstream masked by (act > 0); dst may alias upstream.
Tensor relu_backward(const Tensor& upstream, const Tensor& act) {
  Tensor out = upstream;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    if (!(act.data[i] > 0.0f)) out.data[i] = 0.0f;
  }
  return out;
}

Tensor col_sum(const Tensor& m) {
  Tensor out({m.dims[1]});
  for (std::size_t i = 0; i < m.dims[0]; ++i) {
    const float* row = &m.data[i * m.dims[1]];
    for (std::size_t j = 0; j < m.dims[1]; ++j) out.data[j] += row[j];
  }
  return out;
}

}  // namespace

Tensor mlp_forward(const ParamSet& params, const Tensor& input,
                   MlpTrace* trace) {
  const MlpDims d = mlp_dims(params);
  if (input.rank() != 2 || input.dims[1] != d.in) {
    throw DimensionError("mlp_forward: input " + input.shape_str() +
                         " does not match " + params.arch_tag);
  }
  Tensor h1 = matmul(input, params.at("w1"));
  add_row_inplace(h1, params.at("b1"));
  relu_inplace(h1);

  Tensor h2 = matmul(h1, params.at("w2"));
  add_row_inplace(h2, params.at("b2"));
  relu_inplace(h2);

  Tensor out = matmul(h2, params.at("w3"));
  add_row_inplace(out, params.at("b3"));

  if (trace != nullptr) {
    trace->input = input;
    trace->h1 = std::move(h1);
    trace->h2 = std::move(h2);
    trace->valid = true;
  }
  return out;
}

MlpGrads mlp_backward(const ParamSet& params, const MlpTrace& trace,
                      const Tensor& upstream) {
  if (!trace.valid) {
    throw StateError("mlp_backward: trace was not filled by mlp_forward");
  }
  const MlpDims d = mlp_dims(params);
  const std::size_t batch = trace.input.dims[0];
  if (upstream.rank() != 2 || upstream.dims[0] != batch ||
      upstream.dims[1] != d.out) {
    throw DimensionError("mlp_backward: upstream " + upstream.shape_str() +
                         " does not match " + params.arch_tag);
  }

  MlpGrads g;
  g.params.arch_tag = params.arch_tag;

  // Head layer.
  Tensor gw3 = matmul_at(trace.h2, upstream);
  Tensor gb3 = col_sum(upstream);
  Tensor gh2 = relu_backward(matmul_bt(upstream, params.at("w3")), trace.h2);

  Tensor gw2 = matmul_at(trace.h1, gh2);
  Tensor gb2 = col_sum(gh2);
  Tensor gh1 = relu_backward(matmul_bt(gh2, params.at("w2")), trace.h1);

  Tensor gw1 = matmul_at(trace.input, gh1);
  Tensor gb1 = col_sum(gh1);
  g.input = matmul_bt(gh1, params.at("w1"));

  g.params.entries = {{"w1", std::move(gw1)}, {"b1", std::move(gb1)},
                      {"w2", std::move(gw2)}, {"b2", std::move(gb2)},
                      {"w3", std::move(gw3)}, {"b3", std::move(gb3)}};
  return g;
}

Tensor mlp_input_grad(const ParamSet& params, const MlpTrace& trace,
                      const Tensor& upstream) {
  if (!trace.valid) {
    throw StateError("mlp_input_grad: trace was not filled by mlp_forward");
  }
  Tensor gh2 = relu_backward(matmul_bt(upstream, params.at("w3")), trace.h2);
  Tensor gh1 = relu_backward(matmul_bt(gh2, params.at("w2")), trace.h1);
  return matmul_bt(gh1, params.at("w1"));
}

}  // namespace resprect
