#include "mvlab/model.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "mvlab/wasserstein.hpp"

namespace mvlab {

void AssumptionConstants::validate() const {
  if (p < 1.0) throw std::invalid_argument("constants: p must be >= 1");
  if (sigma0 < 0.0) throw std::invalid_argument("constants: sigma0 must be >= 0");
  if (sigma0 > sigma_sup) throw std::invalid_argument("constants: sigma0 must be <= sigma_sup");
  if (delta < 0.0) throw std::invalid_argument("constants: delta must be >= 0");
  if (K1.has_value() != r0.has_value())
    throw std::invalid_argument("constants: K1 and r0 must be declared together");
  if (K1 && *K1 <= 0.0) throw std::invalid_argument("constants: K1 must be > 0");
  if (r0 && *r0 <= 0.0) throw std::invalid_argument("constants: r0 must be > 0");
}

MeasureView ModelSpec::view(const EmpiricalMeasure& mu) const {
  MeasureView v;
  v.mean = mu.mean();
  if (measure_feature == MeasureFeature::FullCloud) v.cloud = &mu;
  return v;
}

namespace {

class Params {
 public:
  Params(std::string model, const std::map<std::string, double>& kv) : model_(std::move(model)) {
    for (const auto& [k, v] : kv) kv_[k] = v;
  }

  double require(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end())
      throw std::invalid_argument(model_ + ": missing required param '" + key + "'");
    seen_.insert(key);
    return it->second;
  }

  double get(const std::string& key, double fallback) {
    auto it = kv_.find(key);
    seen_.insert(key);
    return it == kv_.end() ? fallback : it->second;
  }

  void finish() const {
    for (const auto& [k, _] : kv_)
      if (!seen_.count(k))
        throw std::invalid_argument(model_ + ": unknown param '" + k + "'");
  }

 private:
  std::string model_;
  std::map<std::string, double> kv_;
  std::set<std::string> seen_;
};

ModelSpec make_mean_field_ou(Params& p) {
  const double a = p.require("a");
  const double c = p.get("c", 0.0);
  const double s = p.require("s");
  const int d = static_cast<int>(p.get("d", 1.0));
  p.finish();
  if (s < 0.0) throw std::invalid_argument("mean_field_ou: s must be >= 0");
  if (d < 1) throw std::invalid_argument("mean_field_ou: d must be >= 1");

  ModelSpec m;
  m.dim = d;
  m.name = "mean_field_ou";
  m.drift = [a, c](const Eigen::VectorXd& x, const MeasureView& mu) -> Eigen::VectorXd {
    return -a * x + c * mu.mean;
  };
  const Eigen::MatrixXd sig = s * Eigen::MatrixXd::Identity(d, d);
  m.diffusion = [sig](const Eigen::VectorXd&, const MeasureView&) { return sig; };
  // Young split: 2<b(x,mu)-b(y,nu), x-y> <= (-2a+1)|x-y|^2 + c^2 W_1^2
  m.constants.p = 1.0;
  m.constants.K0 = 1.0 - 2.0 * a;
  m.constants.delta = std::abs(c);
  m.constants.sigma0 = s;
  m.constants.sigma_sup = s * std::sqrt(static_cast<double>(d));
  if (2.0 * a - 1.0 > 0.0) {
    m.constants.K1 = 2.0 * a - 1.0;
    m.constants.r0 = 1.0;
  }
  m.constants.validate();
  return m;
}

// Double-well confinement with linear-in-mean interaction, the quadratic
// interaction kernel b2(x,z) = c (z - x).
ModelSpec make_granular(double theta1, double theta2, double c, double s, std::string name) {
  if (theta1 <= 0.0) throw std::invalid_argument(name + ": theta1 must be > 0");
  if (theta2 < 0.0) throw std::invalid_argument(name + ": theta2 must be >= 0");
  if (c < 0.0) throw std::invalid_argument(name + ": c must be >= 0");
  if (s <= 0.0) throw std::invalid_argument(name + ": s must be > 0");

  ModelSpec m;
  m.dim = 1;
  m.name = std::move(name);
  m.drift = [theta1, theta2, c](const Eigen::VectorXd& x, const MeasureView& mu) {
    Eigen::VectorXd out(1);
    out[0] = -2.0 * theta1 * x[0] * x[0] * x[0] + 0.5 * theta2 * x[0] + c * (mu.mean[0] - x[0]);
    return out;
  };
  const Eigen::MatrixXd sig = Eigen::MatrixXd::Constant(1, 1, s);
  m.diffusion = [sig](const Eigen::VectorXd&, const MeasureView&) { return sig; };
  // |d1 b2| <= c and |d2 b2| = c <= delta/sqrt(2); the drift bound then reads
  // -theta1 |x-y|^4 + (theta2 + 2c + 1)|x-y|^2 + (delta^2/2) W_1^2
  const double k0 = theta2 + 2.0 * c + 1.0;
  m.constants.p = 1.0;
  m.constants.K0 = k0;
  m.constants.delta = std::sqrt(2.0) * c;
  m.constants.sigma0 = s;
  m.constants.sigma_sup = s;
  m.constants.K1 = k0;
  m.constants.r0 = std::sqrt(2.0 * k0 / theta1);
  m.constants.validate();
  return m;
}

}  // namespace

ModelSpec builtin_model(const std::string& name, const std::map<std::string, double>& params) {
  Params p(name, params);
  if (name == "mean_field_ou") return make_mean_field_ou(p);
  if (name == "granular_media_1d") {
    const double t1 = p.require("theta1"), t2 = p.require("theta2");
    const double c = p.get("c", 0.0), s = p.require("s");
    p.finish();
    return make_granular(t1, t2, c, s, name);
  }
  if (name == "curie_weiss") {
    // Dawson's mean-field double well: b(x,mu) = -x^3 + x + theta (mean - x)
    const double theta = p.require("theta"), s = p.require("s");
    p.finish();
    return make_granular(0.5, 2.0, theta, s, name);
  }
  if (name == "custom")
    throw std::invalid_argument("custom models are constructed through the ModelSpec API");
  throw std::invalid_argument("unknown model '" + name + "'");
}

Eigen::VectorXd eval_drift(const ModelSpec& model, const Eigen::VectorXd& x,
                           const EmpiricalMeasure& mu) {
  if (x.size() != model.dim) throw std::invalid_argument("eval_drift: dim(x) != model.dim");
  if (mu.dim() != model.dim) throw std::invalid_argument("eval_drift: dim(mu) != model.dim");
  return model.drift(x, model.view(mu));
}

Eigen::MatrixXd eval_diffusion(const ModelSpec& model, const Eigen::VectorXd& x,
                               const EmpiricalMeasure& mu) {
  if (x.size() != model.dim) throw std::invalid_argument("eval_diffusion: dim(x) != model.dim");
  if (mu.dim() != model.dim) throw std::invalid_argument("eval_diffusion: dim(mu) != model.dim");
  return model.diffusion(x, model.view(mu));
}

PairSampler default_pair_sampler(const ModelSpec& model, uint64_t seed) {
  const int d = model.dim;
  return [d, seed](int i) -> PairSample {
    const CounterRng rng(seed, kStreamOracle);
    const uint64_t id = static_cast<uint64_t>(i);
    static constexpr double kScales[4] = {0.3, 1.0, 3.0, 10.0};
    const double scale = kScales[i % 4];

    const auto gauss_vec = [&](uint64_t entity, uint32_t slot0, double sd) {
      Eigen::VectorXd v(d);
      for (int k = 0; k < d; ++k) v[k] = sd * rng.normal(entity, id, slot0 + k);
      return v;
    };

    PairSample s;
    s.x = gauss_vec(0, 0, scale);
    s.y = gauss_vec(1, 0, scale);
    const Eigen::VectorXd ma = gauss_vec(2, 0, scale);
    const Eigen::VectorXd mb = gauss_vec(3, 0, scale);

    const int kind = (i / 4) % 3;
    if (kind == 0) {
      s.mu = EmpiricalMeasure::dirac(ma);
      s.nu = EmpiricalMeasure::dirac(mb);
    } else if (kind == 1) {
      const int n = 16;
      Eigen::MatrixXd pa(n, d), pb(n, d);
      for (int r = 0; r < n; ++r) {
        pa.row(r) = (ma + gauss_vec(4 + r, 0, 1.0)).transpose();
        pb.row(r) = (mb + gauss_vec(4 + r, d, 1.0)).transpose();
      }
      s.mu = EmpiricalMeasure(std::move(pa));
      s.nu = EmpiricalMeasure(std::move(pb));
    } else {
      // x - y aligned with the mean gap; catches understated delta
      s.mu = EmpiricalMeasure::dirac(ma);
      s.nu = EmpiricalMeasure::dirac(mb);
      const double u = 2.0 * rng.uniform(20, id, 0);
      s.x = s.y + u * (mb - ma);
    }
    return s;
  };
}

ViolationReport check_dissipativity(const ModelSpec& model, const PairSampler& sampler, int n) {
  if (n < 1) throw std::invalid_argument("check_dissipativity: n must be >= 1");
  const auto& c = model.constants;
  const double cp = 1.0 + std::max(c.p - 2.0, 0.0);
  const bool ball_form = c.K1.has_value() && c.r0.has_value() && c.sigma0 > 0.0 &&
                         std::isfinite(c.sigma_sup);
  const double ball_factor =
      ball_form ? 2.0 * c.sigma_sup * c.sigma_sup / (c.sigma0 * c.sigma0) -
                      (model.dim == 1 ? 1.0 : 0.0)
                : 0.0;

  ViolationReport rep;
  rep.ball_form_checked = ball_form;
  rep.samples = n;
  for (int i = 0; i < n; ++i) {
    PairSample s = sampler(i);
    const Eigen::VectorXd e = s.x - s.y;
    const double e2 = e.squaredNorm();
    const Eigen::VectorXd db =
        model.drift(s.x, model.view(s.mu)) - model.drift(s.y, model.view(s.nu));
    const double ds2 =
        (model.diffusion(s.x, model.view(s.mu)) - model.diffusion(s.y, model.view(s.nu)))
            .squaredNorm();
    const double core = 2.0 * db.dot(e);

    const double wp = wasserstein_auto(s.mu, s.nu, c.p).value;
    const double L = core + cp * ds2 - c.K0 * e2 - c.delta * c.delta * wp * wp;
    rep.max_L = std::max(rep.max_L, L);
    if (L > rep.witness_L) {
      rep.witness = s;
      rep.witness_L = L;
    }
    if (ball_form) {
      const double w1 = (c.p == 1.0) ? wp : wasserstein_auto(s.mu, s.nu, 1.0).value;
      const double rhs_coef =
          (std::sqrt(e2) <= *c.r0 ? c.K0 + *c.K1 : 0.0) - *c.K1;
      const double sig_term = ds2 == 0.0 ? 0.0 : ball_factor * ds2;
      const double L2 = core + sig_term - rhs_coef * e2 - c.delta * c.delta * w1 * w1;
      rep.max_L_ball = std::max(rep.max_L_ball, L2);
      if (L2 > rep.witness_L) {
        rep.witness = s;
        rep.witness_L = L2;
      }
    }
  }
  return rep;
}

}  // namespace mvlab
