#include "gazelab/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace gazelab {

namespace {

struct Evaluation {
    double value;
    double kink;
    std::uint64_t branches;
};

Evaluation evaluate(const ScalarFn& f) {
    Tape tape;
    const Var root = f(tape);
    return {root.item(), tape.min_kink_distance(), tape.branch_signature()};
}

}  // namespace

GradCheckResult gradient_check(const ScalarFn& f, std::span<Param* const> params,
                               const GradCheckOptions& options) {
    for (Param* p : params) p->zero_grad();
    Evaluation base{};
    {
        Tape tape;
        const Var root = f(tape);
        tape.backward(root);
        base = {root.item(), tape.min_kink_distance(), tape.branch_signature()};
    }

    GradCheckResult result;
    if (base.kink < options.kink_exclusion) {
        // Every component sits next to a kink; nothing can be compared.
        for (Param* p : params) result.skipped += p->value.size();
        return result;
    }
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Param& p = *params[pi];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double saved = p.value[i];
            p.value[i] = saved + options.step;
            const Evaluation plus = evaluate(f);
            p.value[i] = saved - options.step;
            const Evaluation minus = evaluate(f);
            p.value[i] = saved;

            if (plus.branches != base.branches || minus.branches != base.branches ||
                plus.kink < options.kink_exclusion || minus.kink < options.kink_exclusion) {
                ++result.skipped;
                continue;
            }
            const double numeric = (plus.value - minus.value) / (2.0 * options.step);
            const double err = std::abs(p.grad[i] - numeric) / std::max(1.0, std::abs(numeric));
            ++result.compared;
            if (err > result.max_rel_error || result.worst.empty()) {
                result.max_rel_error = std::max(result.max_rel_error, err);
                if (err >= result.max_rel_error) {
                    result.worst = "param#" + std::to_string(pi) + "[" + std::to_string(i) + "]";
                }
            }
        }
    }
    return result;
}

}  // namespace gazelab
