#include "mjo/adam.hpp"

#include <cmath>

#include "mjo/container.hpp"

namespace mjo::ad {

Adam::Adam(AdamConfig cfg, const std::vector<Tensor>& params) : cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& p : params) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void Adam::step(std::vector<Tensor>& params) {
  if (params.size() != m_.size()) throw ModelError("adam: parameter list changed size");
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    auto vals = p.grad_mut();  // ensures a (possibly zero) gradient buffer
    auto theta = p.values_mut();
    auto& m = m_[pi];
    auto& v = v_[pi];
    if (m.size() != theta.size()) throw ModelError("adam: moment/parameter shape mismatch");
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = vals[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      theta[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

Tensor ParamStore::create(const std::string& name, Shape shape, Init init, int fan_in, int fan_out,
                          Rng& rng) {
  if (has(name)) throw ModelError("param store: duplicate name " + name);
  const std::size_t n = shape_numel(shape);
  std::vector<double> values(n, 0.0);
  if (init == Init::Glorot) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& x : values) x = rng.uniform(-bound, bound);
  }
  Tensor t = Tensor::from_values(std::move(shape), std::move(values), /*requires_grad=*/true);
  entries_.emplace_back(name, t);
  return t;
}

Tensor ParamStore::get(const std::string& name) const {
  for (const auto& [n, t] : entries_)
    if (n == name) return t;
  throw ModelError("param store: missing parameter " + name);
}

bool ParamStore::has(const std::string& name) const {
  for (const auto& [n, t] : entries_)
    if (n == name) return true;
  return false;
}

std::vector<Tensor> ParamStore::all() const {
  std::vector<Tensor> out;
  for (const auto& [n, t] : entries_) out.push_back(t);
  return out;
}

std::vector<Tensor> ParamStore::with_prefix(const std::string& prefix) const {
  std::vector<Tensor> out;
  for (const auto& [n, t] : entries_)
    if (n.rfind(prefix, 0) == 0) out.push_back(t);
  return out;
}

std::int64_t ParamStore::count_with_prefix(const std::string& prefix) const {
  std::int64_t count = 0;
  for (const auto& [n, t] : entries_)
    if (n.rfind(prefix, 0) == 0) count += static_cast<std::int64_t>(t.numel());
  return count;
}

void ParamStore::zero_grads() {
  for (auto& [n, t] : entries_) t.zero_grad();
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params,
                     const Adam* adam,
                     const std::vector<std::pair<std::string, double>>& extra_scalars) {
  ArtifactWriter w("MJOW");
  w.add_scalar("n_params", static_cast<double>(params.entries().size()));
  std::size_t idx = 0;
  for (const auto& [name, t] : params.entries()) {
    std::vector<std::uint64_t> dims;
    for (int d : t.shape()) dims.push_back(static_cast<std::uint64_t>(d));
    w.add("param/" + name, dims, {t.values().begin(), t.values().end()});
    if (adam) {
      w.add("adam_m/" + name, dims, adam->first_moments()[idx]);
      w.add("adam_v/" + name, dims, adam->second_moments()[idx]);
    }
    ++idx;
  }
  if (adam) {
    w.add_scalar("adam_step", static_cast<double>(adam->step_count()));
    w.add_scalar("adam_lr", adam->config().learning_rate);
  }
  for (const auto& [k, v] : extra_scalars) w.add_scalar("meta/" + k, v);
  w.save(path);
}

void load_checkpoint_values(const std::filesystem::path& path, ParamStore& params) {
  ArtifactReader r(path, "MJOW");
  for (auto& [name, t] : params.entries_mut()) {
    const auto& data = r.data("param/" + name);
    if (data.size() != t.numel())
      throw DataError("checkpoint: size mismatch for parameter " + name);
    auto vals = t.values_mut();
    std::copy(data.begin(), data.end(), vals.begin());
  }
}

}  // namespace mjo::ad
