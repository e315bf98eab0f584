#include "tagseq/grad_check.hpp"

#include <cmath>
#include <vector>

namespace tagseq {

namespace {

double eval_loss(const LossBuilder& build) {
  Graph g;
  Var loss = build(g);
  return g.value(loss).data[0];
}

}  // namespace

double grad_check(ParameterStore& params, const LossBuilder& build, double eps) {
  params.zero_grads();
  {
    Graph g;
    Var loss = build(g);
    g.backward(loss);
  }
  std::vector<std::vector<double>> analytic(params.size());
  for (size_t p = 0; p < params.size(); ++p) analytic[p] = params[p].grad.data;

  double worst = 0.0;
  for (size_t p = 0; p < params.size(); ++p) {
    Parameter& par = params[p];
    for (size_t i = 0; i < par.value.data.size(); ++i) {
      const double saved = par.value.data[i];
      par.value.data[i] = saved + eps;
      const double up = eval_loss(build);
      par.value.data[i] = saved - eps;
      const double down = eval_loss(build);
      par.value.data[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[p][i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-12});
      worst = std::max(worst, std::fabs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace tagseq
