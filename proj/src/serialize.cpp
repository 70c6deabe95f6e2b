#include <istream>
#include <ostream>
#include <string>

#include "npspec/errors.hpp"
#include "npspec/hmm.hpp"
#include "npspec/spectral.hpp"
#include "textio.hpp"

namespace npspec::spectral {
namespace {

constexpr const char* kRepMagic = "npspec-observable-rep";
constexpr int kRepVersion = 1;

const char* kernel_name(kde::KernelKind k) {
  return k == kde::KernelKind::Gaussian ? "gaussian" : "legendre";
}

}  // namespace

void save(std::ostream& os, const ObservableRep& rep) {
  textio::Writer w(os);
  w.value(kRepMagic, kRepVersion);
  w.value("m", rep.m);
  w.value("n_triples", rep.n_triples);
  os << "kernel " << kernel_name(rep.kernel.kind) << ' ' << rep.kernel.order << '\n';
  w.real("bandwidth", rep.kernel.bandwidth);
  w.real("h1", rep.h1);
  w.real("h21", rep.h21);
  w.real("h321", rep.h321);
  w.real("scale", rep.scale);
  w.real("mass", rep.mass);
  w.vector("sigma", rep.sigma);
  w.vector("b1", rep.b1);
  w.vector("binf", rep.binf);
  w.matrix("B_left", rep.B_left);
  w.matrix("B_right", rep.B_right);
  w.reals("centers", rep.centers);
  w.value("U", rep.U.size());
  for (const auto& u : rep.U) w.series("fun", u);
  const std::size_t ne = rep.emissions ? rep.emissions->cols() : 0;
  w.value("emissions", ne);
  for (std::size_t j = 0; j < ne; ++j) w.series("fun", rep.emissions->col(j));
  w.line("end");
  if (!os) raise(ErrorKind::Io, "write failed");
}

ObservableRep load_rep(std::istream& is) {
  textio::Reader r(is);
  r.expect(kRepMagic);
  if (r.count() != kRepVersion) r.fail("unsupported observable-rep version");
  ObservableRep rep;
  r.expect("m");
  rep.m = r.count(1u << 20);
  r.expect("n_triples");
  rep.n_triples = r.count();
  r.expect("kernel");
  const std::string kind = r.word();
  if (kind == "gaussian") {
    rep.kernel.kind = kde::KernelKind::Gaussian;
  } else if (kind == "legendre") {
    rep.kernel.kind = kde::KernelKind::Legendre;
  } else {
    r.fail("unknown kernel '" + kind + "'");
  }
  rep.kernel.order = static_cast<int>(r.count(1000));
  r.expect("bandwidth");
  rep.kernel.bandwidth = r.real();
  r.expect("h1");
  rep.h1 = r.real();
  r.expect("h21");
  rep.h21 = r.real();
  r.expect("h321");
  rep.h321 = r.real();
  r.expect("scale");
  rep.scale = r.real();
  r.expect("mass");
  rep.mass = r.real();
  rep.sigma = r.vector("sigma");
  rep.b1 = r.vector("b1");
  rep.binf = r.vector("binf");
  rep.B_left = r.matrix("B_left");
  rep.B_right = r.matrix("B_right");
  rep.centers = r.reals("centers");
  r.expect("U");
  const std::size_t nu = r.count(1u << 20);
  for (std::size_t j = 0; j < nu; ++j) rep.U.push_back(r.series("fun"));
  r.expect("emissions");
  const std::size_t ne = r.count(1u << 20);
  if (ne > 0) {
    std::vector<cheb::ChebSeries> cols;
    for (std::size_t j = 0; j < ne; ++j) cols.push_back(r.series("fun"));
    const cheb::Interval dom = cols.front().interval();
    rep.emissions = qc::QMatrix(dom, std::move(cols));
  }
  r.expect("end");

  const auto m = static_cast<Eigen::Index>(rep.m);
  const Eigen::Index k = rep.B_left.cols();
  const bool shapes_ok = rep.m >= 1 && rep.b1.size() == m && rep.binf.size() == m &&
                         rep.B_left.rows() == m && rep.B_right.rows() == k &&
                         rep.B_right.cols() == m &&
                         (rep.emissions ? rep.emissions->cols() == static_cast<std::size_t>(k)
                                        : rep.centers.size() == static_cast<std::size_t>(k));
  if (!shapes_ok) r.fail("inconsistent observable-rep shapes");
  rep.kernel.validate();
  return rep;
}

}  // namespace npspec::spectral

namespace npspec::hmm {
namespace {
constexpr const char* kModelMagic = "npspec-hmm-model";
constexpr int kModelVersion = 1;
}  // namespace

void save(std::ostream& os, const HMMModel& model) {
  textio::Writer w(os);
  w.value(kModelMagic, kModelVersion);
  w.value("m", model.m);
  w.vector("pi", model.pi);
  w.matrix("T", model.T);
  w.value("emissions", model.emissions.cols());
  for (const auto& f : model.emissions.columns()) w.series("fun", f);
  w.line("end");
  if (!os) raise(ErrorKind::Io, "write failed");
}

HMMModel load_model(std::istream& is) {
  textio::Reader r(is);
  r.expect(kModelMagic);
  if (r.count() != kModelVersion) r.fail("unsupported hmm-model version");
  r.expect("m");
  const std::size_t m = r.count(1u << 16);
  Vector pi = r.vector("pi");
  Matrix T = r.matrix("T");
  r.expect("emissions");
  const std::size_t ne = r.count(1u << 16);
  if (ne == 0) r.fail("model without emissions");
  std::vector<cheb::ChebSeries> cols;
  for (std::size_t j = 0; j < ne; ++j) cols.push_back(r.series("fun"));
  r.expect("end");
  const cheb::Interval dom = cols.front().interval();
  HMMModel model{m, std::move(pi), std::move(T), qc::QMatrix(dom, std::move(cols))};
  model.validate();
  return model;
}

}  // namespace npspec::hmm
