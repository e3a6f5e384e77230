#include "medit/nn/tape.hpp"

#include <cmath>
#include <utility>

namespace medit::nn {

Parameter& ParamStore::create(std::string name, Eigen::Index rows, Eigen::Index cols, int group) {
    auto p = std::make_unique<Parameter>();
    p->name = std::move(name);
    p->index = static_cast<int>(items_.size());
    p->group = group;
    p->value = Mat::Zero(rows, cols);
    items_.push_back(std::move(p));
    return *items_.back();
}

Parameter* ParamStore::find(std::string_view name) {
    for (auto& p : items_)
        if (p->name == name) return p.get();
    return nullptr;
}

const Parameter* ParamStore::find(std::string_view name) const {
    for (const auto& p : items_)
        if (p->name == name) return p.get();
    return nullptr;
}

void ParamStore::zero_grads() {
    for (auto& p : items_) p->zero_grad();
}

double ParamStore::grad_norm() const {
    double sq = 0.0;
    for (const auto& p : items_)
        if (p->has_grad()) sq += p->grad.squaredNorm();
    return std::sqrt(sq);
}

std::size_t ParamStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : items_) n += static_cast<std::size_t>(p->value.size());
    return n;
}

void GradSink::accumulate(const Parameter& p, const Mat& g) {
    if (grads.size() <= static_cast<std::size_t>(p.index))
        grads.resize(static_cast<std::size_t>(p.index) + 1);
    Mat& slot = grads[static_cast<std::size_t>(p.index)];
    if (slot.size() == 0)
        slot = g;
    else
        slot += g;
}

void GradSink::merge_into(ParamStore& store) const {
    for (std::size_t i = 0; i < grads.size(); ++i)
        if (grads[i].size() > 0) store[i].accumulate(grads[i]);
}

void GradSink::reset() {
    for (auto& g : grads) g.resize(0, 0);
}

Tape::Var Tape::push(Mat value, bool needs_grad, std::function<void(Tape&)> back) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Mat& Tape::grad_ref(int id) {
    Node& n = node(id);
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

Var Tape::constant(Mat value) { return push(std::move(value), false, nullptr); }

Var Tape::leaf(Parameter& p) {
    Var v = push(p.value, true, nullptr);
    node(v.id).param = &p;
    return v;
}

Var Tape::matmul(Var a, Var b) {
    const Mat& av = val(a);
    const Mat& bv = val(b);
    if (av.cols() != bv.rows()) throw InputError("tape: matmul shape mismatch");
    const bool ng = requires_grad(a) || requires_grad(b);
    Var out = push(av * bv, ng, nullptr);
    if (ng)
        node(out.id).back = [a, b, out](Tape& t) {
            const Mat& g = t.node(out.id).grad;
            t.accum(a.id, g * t.val(b).transpose());
            t.accum(b.id, t.val(a).transpose() * g);
        };
    return out;
}

Var Tape::add(Var a, Var b) {
    const Mat& av = val(a);
    const Mat& bv = val(b);
    if (av.rows() != bv.rows() || av.cols() != bv.cols())
        throw InputError("tape: add shape mismatch");
    const bool ng = requires_grad(a) || requires_grad(b);
    Var out = push(av + bv, ng, nullptr);
    if (ng)
        node(out.id).back = [a, b, out](Tape& t) {
            const Mat& g = t.node(out.id).grad;
            t.accum(a.id, g);
            t.accum(b.id, g);
        };
    return out;
}

Var Tape::sub(Var a, Var b) {
    const Mat& av = val(a);
    const Mat& bv = val(b);
    if (av.rows() != bv.rows() || av.cols() != bv.cols())
        throw InputError("tape: sub shape mismatch");
    const bool ng = requires_grad(a) || requires_grad(b);
    Var out = push(av - bv, ng, nullptr);
    if (ng)
        node(out.id).back = [a, b, out](Tape& t) {
            const Mat& g = t.node(out.id).grad;
            t.accum(a.id, g);
            t.accum(b.id, -g);
        };
    return out;
}

Var Tape::hadamard(Var a, Var b) {
    const Mat& av = val(a);
    const Mat& bv = val(b);
    if (av.rows() != bv.rows() || av.cols() != bv.cols())
        throw InputError("tape: hadamard shape mismatch");
    const bool ng = requires_grad(a) || requires_grad(b);
    Var out = push(av.cwiseProduct(bv), ng, nullptr);
    if (ng)
        node(out.id).back = [a, b, out](Tape& t) {
            const Mat& g = t.node(out.id).grad;
            t.accum(a.id, g.cwiseProduct(t.val(b)));
            t.accum(b.id, g.cwiseProduct(t.val(a)));
        };
    return out;
}

Var Tape::scale(Var a, double s) {
    const bool ng = requires_grad(a);
    Var out = push(val(a) * s, ng, nullptr);
    if (ng)
        node(out.id).back = [a, s, out](Tape& t) { t.accum(a.id, t.node(out.id).grad * s); };
    return out;
}

Var Tape::transpose(Var a) {
    const bool ng = requires_grad(a);
    Var out = push(val(a).transpose(), ng, nullptr);
    if (ng)
        node(out.id).back = [a, out](Tape& t) {
            t.accum(a.id, t.node(out.id).grad.transpose());
        };
    return out;
}

Var Tape::add_rows(Var a, Var row) {
    const Mat& av = val(a);
    const Mat& rv = val(row);
    if (rv.rows() != 1 || rv.cols() != av.cols())
        throw InputError("tape: add_rows expects a 1 x cols row");
    const bool ng = requires_grad(a) || requires_grad(row);
    Var out = push(av.rowwise() + rv.row(0), ng, nullptr);
    if (ng)
        node(out.id).back = [a, row, out](Tape& t) {
            const Mat& g = t.node(out.id).grad;
            t.accum(a.id, g);
            t.accum(row.id, g.colwise().sum());
        };
    return out;
}

Var Tape::scale_rows(Var a, Var row) {
    const Mat& av = val(a);
    const Mat& rv = val(row);
    if (rv.rows() != 1 || rv.cols() != av.cols())
        throw InputError("tape: scale_rows expects a 1 x cols row");
    const bool ng = requires_grad(a) || requires_grad(row);
    Mat v = av.array().rowwise() * rv.row(0).array();
    Var out = push(std::move(v), ng, nullptr);
    if (ng)
        node(out.id).back = [a, row, out](Tape& t) {
            const Mat& g = t.node(out.id).grad;
            t.accum(a.id, (g.array().rowwise() * t.val(row).row(0).array()).matrix());
            t.accum(row.id, g.cwiseProduct(t.val(a)).colwise().sum());
        };
    return out;
}

Var Tape::concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw InputError("tape: concat_rows of nothing");
    Eigen::Index rows = 0;
    const Eigen::Index cols = val(parts[0]).cols();
    bool ng = false;
    for (Var p : parts) {
        if (val(p).cols() != cols) throw InputError("tape: concat_rows column mismatch");
        rows += val(p).rows();
        ng = ng || requires_grad(p);
    }
    Mat v(rows, cols);
    Eigen::Index r = 0;
    for (Var p : parts) {
        v.middleRows(r, val(p).rows()) = val(p);
        r += val(p).rows();
    }
    std::vector<Var> held(parts.begin(), parts.end());
    Var out = push(std::move(v), ng, nullptr);
    if (ng)
        node(out.id).back = [held = std::move(held), out](Tape& t) {
            const Mat& g = t.node(out.id).grad;
            Eigen::Index r = 0;
            for (Var p : held) {
                const Eigen::Index n = t.val(p).rows();
                t.accum(p.id, g.middleRows(r, n));
                r += n;
            }
        };
    return out;
}

Var Tape::slice_rows(Var a, Eigen::Index r0, Eigen::Index n) {
    const Mat& av = val(a);
    if (r0 < 0 || n < 1 || r0 + n > av.rows()) throw InputError("tape: slice_rows out of range");
    const bool ng = requires_grad(a);
    Var out = push(av.middleRows(r0, n), ng, nullptr);
    if (ng)
        node(out.id).back = [a, r0, n, out](Tape& t) {
            if (!t.node(a.id).needs_grad) return;
            t.grad_ref(a.id).middleRows(r0, n) += t.node(out.id).grad;
        };
    return out;
}

Var Tape::concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw InputError("tape: concat_cols of nothing");
    Eigen::Index cols = 0;
    const Eigen::Index rows = val(parts[0]).rows();
    bool ng = false;
    for (Var p : parts) {
        if (val(p).rows() != rows) throw InputError("tape: concat_cols row mismatch");
        cols += val(p).cols();
        ng = ng || requires_grad(p);
    }
    Mat v(rows, cols);
    Eigen::Index c = 0;
    for (Var p : parts) {
        v.middleCols(c, val(p).cols()) = val(p);
        c += val(p).cols();
    }
    std::vector<Var> held(parts.begin(), parts.end());
    Var out = push(std::move(v), ng, nullptr);
    if (ng)
        node(out.id).back = [held = std::move(held), out](Tape& t) {
            const Mat& g = t.node(out.id).grad;
            Eigen::Index c = 0;
            for (Var p : held) {
                const Eigen::Index n = t.val(p).cols();
                t.accum(p.id, g.middleCols(c, n));
                c += n;
            }
        };
    return out;
}

Var Tape::slice_cols(Var a, Eigen::Index c0, Eigen::Index n) {
    const Mat& av = val(a);
    if (c0 < 0 || n < 1 || c0 + n > av.cols()) throw InputError("tape: slice_cols out of range");
    const bool ng = requires_grad(a);
    Var out = push(av.middleCols(c0, n), ng, nullptr);
    if (ng)
        node(out.id).back = [a, c0, n, out](Tape& t) {
            if (!t.node(a.id).needs_grad) return;
            t.grad_ref(a.id).middleCols(c0, n) += t.node(out.id).grad;
        };
    return out;
}

Var Tape::mean_rows(Var a) {
    const Mat& av = val(a);
    const bool ng = requires_grad(a);
    const double inv = 1.0 / static_cast<double>(av.rows());
    Var out = push(av.colwise().mean(), ng, nullptr);
    if (ng)
        node(out.id).back = [a, inv, out](Tape& t) {
            const Mat& g = t.node(out.id).grad;  // 1 x n
            const Eigen::Index m = t.val(a).rows();
            t.accum(a.id, (g * inv).replicate(m, 1));
        };
    return out;
}

Var Tape::softmax_rows(Var a) {
    const Mat& av = val(a);
    Mat p(av.rows(), av.cols());
    for (Eigen::Index r = 0; r < av.rows(); ++r) {
        const double m = av.row(r).maxCoeff();
        Eigen::ArrayXd e = (av.row(r).array() - m).exp();
        p.row(r) = (e / e.sum()).matrix();
    }
    const bool ng = requires_grad(a);
    Var out = push(std::move(p), ng, nullptr);
    if (ng)
        node(out.id).back = [a, out](Tape& t) {
            const Mat& g = t.node(out.id).grad;
            const Mat& pv = t.val(out);
            Mat da(pv.rows(), pv.cols());
            for (Eigen::Index r = 0; r < pv.rows(); ++r) {
                const double dot = g.row(r).dot(pv.row(r));
                da.row(r) = pv.row(r).cwiseProduct(g.row(r).array().matrix() -
                                                   Eigen::RowVectorXd::Constant(pv.cols(), dot));
            }
            t.accum(a.id, da);
        };
    return out;
}

namespace {
inline double norm_cdf(double x) { return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)); }
inline double norm_pdf(double x) { return std::exp(-0.5 * x * x) * 0.3989422804014327; }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

Var Tape::gelu(Var a) {
    const Mat& av = val(a);
    Mat v = av.unaryExpr([](double x) { return x * norm_cdf(x); });
    const bool ng = requires_grad(a);
    Var out = push(std::move(v), ng, nullptr);
    if (ng)
        node(out.id).back = [a, out](Tape& t) {
            const Mat& g = t.node(out.id).grad;
            const Mat d = t.val(a).unaryExpr(
                [](double x) { return norm_cdf(x) + x * norm_pdf(x); });
            t.accum(a.id, g.cwiseProduct(d));
        };
    return out;
}

Var Tape::silu(Var a) {
    const Mat& av = val(a);
    Mat v = av.unaryExpr([](double x) { return x * sigmoid(x); });
    const bool ng = requires_grad(a);
    Var out = push(std::move(v), ng, nullptr);
    if (ng)
        node(out.id).back = [a, out](Tape& t) {
            const Mat& g = t.node(out.id).grad;
            const Mat d = t.val(a).unaryExpr([](double x) {
                const double s = sigmoid(x);
                return s * (1.0 + x * (1.0 - s));
            });
            t.accum(a.id, g.cwiseProduct(d));
        };
    return out;
}

Var Tape::layer_norm_rows(Var a, double eps) {
    const Mat& av = val(a);
    const Eigen::Index n = av.cols();
    Mat xhat(av.rows(), n);
    Eigen::VectorXd inv_std(av.rows());
    for (Eigen::Index r = 0; r < av.rows(); ++r) {
        const double mu = av.row(r).mean();
        const double var = (av.row(r).array() - mu).square().sum() / static_cast<double>(n);
        const double s = 1.0 / std::sqrt(var + eps);
        inv_std[r] = s;
        xhat.row(r) = ((av.row(r).array() - mu) * s).matrix();
    }
    const bool ng = requires_grad(a);
    Var out = push(xhat, ng, nullptr);
    if (ng)
        node(out.id).back = [a, out, inv_std = std::move(inv_std)](Tape& t) {
            const Mat& g = t.node(out.id).grad;
            const Mat& xh = t.val(out);
            const Eigen::Index n = xh.cols();
            Mat da(xh.rows(), n);
            for (Eigen::Index r = 0; r < xh.rows(); ++r) {
                const double gm = g.row(r).mean();
                const double gx = g.row(r).cwiseProduct(xh.row(r)).mean();
                da.row(r) = inv_std[r] *
                            (g.row(r).array() - gm - xh.row(r).array() * gx).matrix();
            }
            t.accum(a.id, da);
        };
    return out;
}

Var Tape::dropout(Var a, double p, Rng& rng) {
    if (p <= 0.0) return a;
    if (p >= 1.0) throw InputError("tape: dropout rate must be < 1");
    const Mat& av = val(a);
    Mat mask(av.rows(), av.cols());
    const double keep = 1.0 - p;
    for (Eigen::Index c = 0; c < av.cols(); ++c)
        for (Eigen::Index r = 0; r < av.rows(); ++r)
            mask(r, c) = rng.uniform() < p ? 0.0 : 1.0 / keep;
    return hadamard(a, constant(std::move(mask)));
}

Var Tape::mse(Var pred, const Mat& target) {
    const Mat& pv = val(pred);
    if (pv.rows() != target.rows() || pv.cols() != target.cols())
        throw InputError("tape: mse shape mismatch");
    const double n = static_cast<double>(pv.size());
    Mat v(1, 1);
    v(0, 0) = (pv - target).squaredNorm() / n;
    const bool ng = requires_grad(pred);
    Var out = push(std::move(v), ng, nullptr);
    if (ng)
        node(out.id).back = [pred, target, n, out](Tape& t) {
            const double g = t.node(out.id).grad(0, 0);
            t.accum(pred.id, (t.val(pred) - target) * (2.0 * g / n));
        };
    return out;
}

Var Tape::cross_entropy_rows(Var logits, const std::vector<int>& labels) {
    const Mat& z = val(logits);
    if (static_cast<Eigen::Index>(labels.size()) != z.rows())
        throw InputError("tape: cross_entropy label count mismatch");
    const int k = static_cast<int>(z.cols());
    for (int y : labels)
        if (y < 0 || y >= k) throw InputError("tape: cross_entropy label out of range");

    Mat probs(z.rows(), z.cols());
    double loss = 0.0;
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const double m = z.row(r).maxCoeff();
        Eigen::ArrayXd e = (z.row(r).array() - m).exp();
        const double sum = e.sum();
        probs.row(r) = (e / sum).matrix();
        loss -= (z(r, labels[static_cast<std::size_t>(r)]) - m - std::log(sum));
    }
    const double inv_f = 1.0 / static_cast<double>(z.rows());
    Mat v(1, 1);
    v(0, 0) = loss * inv_f;
    const bool ng = requires_grad(logits);
    Var out = push(std::move(v), ng, nullptr);
    if (ng)
        node(out.id).back = [logits, labels, probs = std::move(probs), inv_f, out](Tape& t) {
            const double g = t.node(out.id).grad(0, 0);
            Mat d = probs;
            for (Eigen::Index r = 0; r < d.rows(); ++r)
                d(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
            t.accum(logits.id, d * (g * inv_f));
        };
    return out;
}

void Tape::backward(Var loss, GradSink* sink) {
    Node& ln = node(loss.id);
    if (ln.value.rows() != 1 || ln.value.cols() != 1)
        throw InputError("tape: backward needs a scalar loss");
    if (!ln.needs_grad) return;
    grad_ref(loss.id)(0, 0) += 1.0;

    for (int id = loss.id; id >= 0; --id) {
        Node& n = node(id);
        if (!n.needs_grad || n.grad.size() == 0) continue;
        if (n.back) n.back(*this);
        if (n.param) {
            if (sink)
                sink->accumulate(*n.param, n.grad);
            else
                n.param->accumulate(n.grad);
        }
    }
}

}  // namespace medit::nn
