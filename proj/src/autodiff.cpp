#include "frsum/autodiff.hpp"

#include <cmath>

#include "frsum/common.hpp"

namespace frsum::ad {

const Mat& Var::value() const { return tape->value(*this); }

Var Tape::push(Mat value, bool needs_grad, std::function<void()> back) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = grad_enabled_ && needs_grad;
    if (n.needs_grad) {
        n.back = std::move(back);
    }
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Tape::Node& Tape::node(Var v) {
    if (v.tape != this) {
        throw NumericError("autodiff: var belongs to a different tape");
    }
    return nodes_[static_cast<std::size_t>(v.index)];
}

const Tape::Node& Tape::node(Var v) const {
    if (v.tape != this) {
        throw NumericError("autodiff: var belongs to a different tape");
    }
    return nodes_[static_cast<std::size_t>(v.index)];
}

void Tape::accumulate(Node* target, const Mat& g) {
    if (!target->needs_grad) {
        return;
    }
    if (target->grad.size() == 0) {
        target->grad = g;
    } else {
        target->grad += g;
    }
}

const Mat& Tape::value(Var v) const { return node(v).value; }

Mat Tape::grad(Var v) const {
    const Node& n = node(v);
    if (n.grad.size() == 0) {
        return Mat::Zero(n.value.rows(), n.value.cols());
    }
    return n.grad;
}

Var Tape::constant(Mat value) { return push(std::move(value), false); }

Var Tape::leaf(Mat value) { return push(std::move(value), true); }

Var Tape::add(Var a, Var b) {
    Node* na = &node(a);
    Node* nb = &node(b);
    Mat v = na->value + nb->value;
    const bool ng = na->needs_grad || nb->needs_grad;
    Var out = push(std::move(v), ng);
    if (out.valid() && node(out).needs_grad) {
        Node* no = &node(out);
        no->back = [na, nb, no] {
            if (no->grad.size() == 0) return;
            accumulate(na, no->grad);
            accumulate(nb, no->grad);
        };
    }
    return out;
}

Var Tape::sub(Var a, Var b) {
    Node* na = &node(a);
    Node* nb = &node(b);
    Mat v = na->value - nb->value;
    Var out = push(std::move(v), na->needs_grad || nb->needs_grad);
    Node* no = &node(out);
    if (no->needs_grad) {
        no->back = [na, nb, no] {
            if (no->grad.size() == 0) return;
            accumulate(na, no->grad);
            accumulate(nb, -no->grad);
        };
    }
    return out;
}

Var Tape::add_row_broadcast(Var a, Var row) {
    Node* na = &node(a);
    Node* nr = &node(row);
    if (nr->value.rows() != 1 || nr->value.cols() != na->value.cols()) {
        throw NumericError("add_row_broadcast: shape mismatch");
    }
    Mat v = na->value.rowwise() + nr->value.row(0);
    Var out = push(std::move(v), na->needs_grad || nr->needs_grad);
    Node* no = &node(out);
    if (no->needs_grad) {
        no->back = [na, nr, no] {
            if (no->grad.size() == 0) return;
            accumulate(na, no->grad);
            accumulate(nr, no->grad.colwise().sum());
        };
    }
    return out;
}

Var Tape::add_const(Var a, double c) {
    Node* na = &node(a);
    Mat v = (na->value.array() + c).matrix();
    Var out = push(std::move(v), na->needs_grad);
    Node* no = &node(out);
    if (no->needs_grad) {
        no->back = [na, no] {
            if (no->grad.size() == 0) return;
            accumulate(na, no->grad);
        };
    }
    return out;
}

Var Tape::scale(Var a, double c) {
    Node* na = &node(a);
    Mat v = c * na->value;
    Var out = push(std::move(v), na->needs_grad);
    Node* no = &node(out);
    if (no->needs_grad) {
        no->back = [na, no, c] {
            if (no->grad.size() == 0) return;
            accumulate(na, c * no->grad);
        };
    }
    return out;
}

Var Tape::matmul(Var a, Var b) {
    Node* na = &node(a);
    Node* nb = &node(b);
    Mat v = na->value * nb->value;
    Var out = push(std::move(v), na->needs_grad || nb->needs_grad);
    Node* no = &node(out);
    if (no->needs_grad) {
        no->back = [na, nb, no] {
            if (no->grad.size() == 0) return;
            if (na->needs_grad) accumulate(na, no->grad * nb->value.transpose());
            if (nb->needs_grad) accumulate(nb, na->value.transpose() * no->grad);
        };
    }
    return out;
}

Var Tape::matmul_nt(Var a, Var b) {
    Node* na = &node(a);
    Node* nb = &node(b);
    Mat v = na->value * nb->value.transpose();
    Var out = push(std::move(v), na->needs_grad || nb->needs_grad);
    Node* no = &node(out);
    if (no->needs_grad) {
        no->back = [na, nb, no] {
            if (no->grad.size() == 0) return;
            if (na->needs_grad) accumulate(na, no->grad * nb->value);
            if (nb->needs_grad) accumulate(nb, no->grad.transpose() * na->value);
        };
    }
    return out;
}

Var Tape::relu(Var a) {
    Node* na = &node(a);
    Mat v = na->value.cwiseMax(0.0);
    Var out = push(std::move(v), na->needs_grad);
    Node* no = &node(out);
    if (no->needs_grad) {
        no->back = [na, no] {
            if (no->grad.size() == 0) return;
            Mat g = (na->value.array() > 0.0).select(no->grad, Mat::Zero(no->grad.rows(), no->grad.cols()));
            accumulate(na, g);
        };
    }
    return out;
}

Var Tape::layer_norm(Var a, Var gain, Var bias, double eps) {
    Node* na = &node(a);
    Node* ng = &node(gain);
    Node* nb = &node(bias);
    const Mat& x = na->value;
    const Eigen::Index d = x.cols();
    if (ng->value.cols() != d || nb->value.cols() != d) {
        throw NumericError("layer_norm: gain/bias width mismatch");
    }

    Eigen::VectorXd mean = x.rowwise().mean();
    Mat centered = x.colwise() - mean;
    Eigen::VectorXd inv_sigma =
        ((centered.array().square().rowwise().mean() + eps).sqrt()).inverse().matrix();
    Mat xhat = (centered.array().colwise() * inv_sigma.array()).matrix();
    Mat v = ((xhat.array().rowwise() * ng->value.row(0).array()).rowwise() +
             nb->value.row(0).array())
                .matrix();

    Var out = push(std::move(v), na->needs_grad || ng->needs_grad || nb->needs_grad);
    Node* no = &node(out);
    if (no->needs_grad) {
        no->back = [na, ng, nb, no, xhat = std::move(xhat),
                    inv_sigma = std::move(inv_sigma)] {
            if (no->grad.size() == 0) return;
            const Mat& gy = no->grad;
            if (nb->needs_grad) accumulate(nb, gy.colwise().sum());
            if (ng->needs_grad) accumulate(ng, (gy.array() * xhat.array()).colwise().sum().matrix());
            if (na->needs_grad) {
                // dxhat scaled back through the row statistics
                Mat dxh = (gy.array().rowwise() * ng->value.row(0).array()).matrix();
                Eigen::VectorXd m1 = dxh.rowwise().mean();
                Eigen::VectorXd m2 = (dxh.array() * xhat.array()).rowwise().mean().matrix();
                Mat dx = dxh;
                dx.colwise() -= m1;
                dx.array() -= xhat.array().colwise() * m2.array();
                dx.array().colwise() *= inv_sigma.array();
                accumulate(na, dx);
            }
        };
    }
    return out;
}

Var Tape::softmax_rows(Var a) {
    Node* na = &node(a);
    const Mat& x = na->value;
    Mat shifted = x.colwise() - x.rowwise().maxCoeff();
    Mat e = shifted.array().exp().matrix();
    Eigen::VectorXd z = e.rowwise().sum();
    Mat v = (e.array().colwise() / z.array()).matrix();
    Var out = push(std::move(v), na->needs_grad);
    Node* no = &node(out);
    if (no->needs_grad) {
        no->back = [na, no] {
            if (no->grad.size() == 0) return;
            const Mat& y = no->value;
            const Mat& gy = no->grad;
            Eigen::VectorXd dot = (gy.array() * y.array()).rowwise().sum().matrix();
            Mat dx = (y.array() * (gy.colwise() - dot).array()).matrix();
            accumulate(na, dx);
        };
    }
    return out;
}

Var Tape::log_softmax_rows(Var a) {
    Node* na = &node(a);
    const Mat& x = na->value;
    Eigen::VectorXd mx = x.rowwise().maxCoeff();
    Mat shifted = x.colwise() - mx;
    Eigen::VectorXd lse = shifted.array().exp().rowwise().sum().log().matrix();
    Mat v = shifted.colwise() - lse;
    Var out = push(std::move(v), na->needs_grad);
    Node* no = &node(out);
    if (no->needs_grad) {
        no->back = [na, no] {
            if (no->grad.size() == 0) return;
            const Mat& gy = no->grad;
            Eigen::VectorXd rs = gy.rowwise().sum();
            Mat softmax = no->value.array().exp().matrix();
            Mat dx = gy - (softmax.array().colwise() * rs.array()).matrix();
            accumulate(na, dx);
        };
    }
    return out;
}

Var Tape::embed_rows(Var table, std::vector<int> ids) {
    Node* nt = &node(table);
    const Mat& t = nt->value;
    Mat v(static_cast<Eigen::Index>(ids.size()), t.cols());
    for (std::size_t r = 0; r < ids.size(); ++r) {
        const int id = ids[r];
        if (id < 0 || id >= t.rows()) {
            throw DataError("embedding id out of range: " + std::to_string(id));
        }
        v.row(static_cast<Eigen::Index>(r)) = t.row(id);
    }
    Var out = push(std::move(v), nt->needs_grad);
    Node* no = &node(out);
    if (no->needs_grad) {
        no->back = [nt, no, ids = std::move(ids)] {
            if (no->grad.size() == 0) return;
            if (nt->grad.size() == 0) {
                nt->grad = Mat::Zero(nt->value.rows(), nt->value.cols());
            }
            for (std::size_t r = 0; r < ids.size(); ++r) {
                nt->grad.row(ids[r]) += no->grad.row(static_cast<Eigen::Index>(r));
            }
        };
    }
    return out;
}

Var Tape::slice_cols(Var a, int start, int count) {
    Node* na = &node(a);
    Mat v = na->value.middleCols(start, count);
    Var out = push(std::move(v), na->needs_grad);
    Node* no = &node(out);
    if (no->needs_grad) {
        no->back = [na, no, start, count] {
            if (no->grad.size() == 0) return;
            if (na->grad.size() == 0) {
                na->grad = Mat::Zero(na->value.rows(), na->value.cols());
            }
            na->grad.middleCols(start, count) += no->grad;
        };
    }
    return out;
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) {
        throw NumericError("concat_cols: empty input");
    }
    Eigen::Index cols = 0;
    bool ng = false;
    std::vector<Node*> nodes;
    nodes.reserve(parts.size());
    for (Var p : parts) {
        Node* np = &node(p);
        nodes.push_back(np);
        cols += np->value.cols();
        ng = ng || np->needs_grad;
    }
    Mat v(nodes.front()->value.rows(), cols);
    Eigen::Index at = 0;
    for (Node* np : nodes) {
        v.middleCols(at, np->value.cols()) = np->value;
        at += np->value.cols();
    }
    Var out = push(std::move(v), ng);
    Node* no = &node(out);
    if (no->needs_grad) {
        no->back = [nodes = std::move(nodes), no] {
            if (no->grad.size() == 0) return;
            Eigen::Index at = 0;
            for (Node* np : nodes) {
                accumulate(np, no->grad.middleCols(at, np->value.cols()));
                at += np->value.cols();
            }
        };
    }
    return out;
}

Var Tape::pick_sum(Var a, std::vector<std::pair<int, int>> cells, double weight) {
    Node* na = &node(a);
    double total = 0.0;
    for (auto [r, c] : cells) {
        if (r < 0 || r >= na->value.rows() || c < 0 || c >= na->value.cols()) {
            throw NumericError("pick_sum: cell out of range");
        }
        total += na->value(r, c);
    }
    Mat v(1, 1);
    v(0, 0) = weight * total;
    Var out = push(std::move(v), na->needs_grad);
    Node* no = &node(out);
    if (no->needs_grad) {
        no->back = [na, no, cells = std::move(cells), weight] {
            if (no->grad.size() == 0) return;
            if (na->grad.size() == 0) {
                na->grad = Mat::Zero(na->value.rows(), na->value.cols());
            }
            const double g = weight * no->grad(0, 0);
            for (auto [r, c] : cells) {
                na->grad(r, c) += g;
            }
        };
    }
    return out;
}

Var Tape::max_of(const std::vector<Var>& xs) {
    if (xs.empty()) {
        throw NumericError("max_of: empty input");
    }
    std::size_t arg = 0;
    bool ng = false;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        ng = ng || node(xs[i]).needs_grad;
        if (node(xs[i]).value(0, 0) > node(xs[arg]).value(0, 0)) {
            arg = i;
        }
    }
    Node* nwin = &node(xs[arg]);
    Mat v = nwin->value;
    Var out = push(std::move(v), ng);
    Node* no = &node(out);
    if (no->needs_grad) {
        no->back = [nwin, no] {
            if (no->grad.size() == 0) return;
            accumulate(nwin, no->grad);
        };
    }
    return out;
}

Var Tape::mean_of(const std::vector<Var>& xs) {
    if (xs.empty()) {
        throw NumericError("mean_of: empty input");
    }
    if (xs.size() == 1) {
        return xs.front();
    }
    bool ng = false;
    std::vector<Node*> nodes;
    nodes.reserve(xs.size());
    double total = 0.0;
    for (Var x : xs) {
        Node* nx = &node(x);
        nodes.push_back(nx);
        ng = ng || nx->needs_grad;
        total += nx->value(0, 0);
    }
    Mat v(1, 1);
    v(0, 0) = total / static_cast<double>(xs.size());
    Var out = push(std::move(v), ng);
    Node* no = &node(out);
    if (no->needs_grad) {
        const double inv = 1.0 / static_cast<double>(xs.size());
        no->back = [nodes = std::move(nodes), no, inv] {
            if (no->grad.size() == 0) return;
            const Mat g = inv * no->grad;
            for (Node* nx : nodes) {
                accumulate(nx, g);
            }
        };
    }
    return out;
}

void Tape::backward(Var loss) {
    if (!grad_enabled_) {
        throw NumericError("backward() on a forward-only tape");
    }
    if (backward_done_) {
        throw NumericError("backward() may run once per tape");
    }
    backward_done_ = true;
    Node& l = node(loss);
    if (l.value.rows() != 1 || l.value.cols() != 1) {
        throw NumericError("backward() expects a scalar loss");
    }
    l.grad = Mat::Ones(1, 1);
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& n = nodes_[i];
        if (n.needs_grad && n.back && n.grad.size() != 0) {
            n.back();
        }
    }
}

}  // namespace frsum::ad
