#include "skewmix/trigpoly.hpp"

#include "skewmix/errors.hpp"

namespace skewmix {

void TrigPoly::add_term(VecI k, double a, double b) {
  if (k.size() != dim_)
    throw ConfigError("trig term frequency dimension mismatch");
  bool all_zero = true;
  int first_nz = -1;
  for (int i = 0; i < k.size(); ++i) {
    if (k[i] != 0) {
      all_zero = false;
      if (first_nz < 0) first_nz = i;
    }
  }
  if (all_zero) { // cos(0)=1, sin(0)=0
    c0_ += a;
    return;
  }
  if (k[first_nz] < 0) { // canonical sign: cos even, sin odd
    k = -k;
    b = -b;
  }
  for (auto& t : terms_) {
    if (t.k == k) {
      t.a += a;
      t.b += b;
      return;
    }
  }
  terms_.push_back({k, a, b});
}

double TrigPoly::eval(const Vec& x) const {
  double v = c0_;
  for (const auto& t : terms_) {
    double ph = 0.0;
    for (int i = 0; i < dim_; ++i) ph += t.k[i] * x[i];
    ph *= kTwoPi;
    v += t.a * std::cos(ph) + t.b * std::sin(ph);
  }
  return v;
}

Vec TrigPoly::grad(const Vec& x) const {
  Vec g = Vec::Zero(dim_);
  for (const auto& t : terms_) {
    double ph = 0.0;
    for (int i = 0; i < dim_; ++i) ph += t.k[i] * x[i];
    ph *= kTwoPi;
    double d = kTwoPi * (-t.a * std::sin(ph) + t.b * std::cos(ph));
    for (int i = 0; i < dim_; ++i) g[i] += t.k[i] * d;
  }
  return g;
}

double TrigPoly::partial(const Vec& x, int j) const {
  return grad(x)[j];
}

double TrigPoly::grad_l1() const {
  double s = 0.0;
  for (const auto& t : terms_) {
    double kn = std::sqrt(double(t.k.squaredNorm()));
    s += kTwoPi * kn * std::sqrt(t.a * t.a + t.b * t.b);
  }
  return s;
}

double TrigPoly::hess_l1() const {
  double s = 0.0;
  for (const auto& t : terms_) {
    double kn = std::sqrt(double(t.k.squaredNorm()));
    s += kTwoPi * kTwoPi * kn * kn * std::sqrt(t.a * t.a + t.b * t.b);
  }
  return s;
}

int TrigPoly::max_freq() const {
  int m = 0;
  for (const auto& t : terms_)
    for (int i = 0; i < t.k.size(); ++i) m = std::max(m, std::abs(t.k[i]));
  return m;
}

TrigPoly& TrigPoly::operator+=(const TrigPoly& o) {
  if (o.dim_ != dim_) throw ConfigError("trig poly dimension mismatch");
  c0_ += o.c0_;
  for (const auto& t : o.terms_) add_term(t.k, t.a, t.b);
  return *this;
}

TrigPoly& TrigPoly::operator*=(double s) {
  c0_ *= s;
  for (auto& t : terms_) {
    t.a *= s;
    t.b *= s;
  }
  return *this;
}

} // namespace skewmix
