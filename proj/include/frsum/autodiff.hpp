#pragma once

#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace frsum::ad {

using Mat = Eigen::MatrixXd;

class Tape;

// Handle to a node on a tape. Cheap to copy; valid for the tape's lifetime.
struct Var {
    Tape* tape = nullptr;
    int index = -1;

    bool valid() const { return tape != nullptr && index >= 0; }
    const Mat& value() const;
    int rows() const { return static_cast<int>(value().rows()); }
    int cols() const { return static_cast<int>(value().cols()); }
};

// Reverse-mode tape over Eigen double matrices. Execution order is the
// topological order, so backward() is a single reverse sweep. Scalars are
// 1x1 matrices. A tape built with grad_enabled=false records values only and
// serves as the shared forward-only scoring path.
class Tape {
public:
    explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool grad_enabled() const { return grad_enabled_; }

    Var constant(Mat value);  // never receives gradient
    Var leaf(Mat value);      // gradient target (parameters, probed inputs)

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var add_row_broadcast(Var a, Var row);  // row is 1 x cols(a)
    Var add_const(Var a, double c);
    Var scale(Var a, double c);
    Var matmul(Var a, Var b);
    Var matmul_nt(Var a, Var b);  // a * b^T
    Var relu(Var a);
    Var layer_norm(Var a, Var gain, Var bias, double eps = 1e-5);
    Var softmax_rows(Var a);
    Var log_softmax_rows(Var a);
    Var embed_rows(Var table, std::vector<int> ids);
    Var slice_cols(Var a, int start, int count);
    Var concat_cols(const std::vector<Var>& parts);
    // weight * sum of selected (row, col) cells; the workhorse behind NLL and
    // span prefix log-probabilities
    Var pick_sum(Var a, std::vector<std::pair<int, int>> cells, double weight = 1.0);
    Var max_of(const std::vector<Var>& xs);   // 1x1 inputs; first argmax takes the gradient
    Var mean_of(const std::vector<Var>& xs);  // 1x1 inputs
    Var zero_scalar() { return constant(Mat::Zero(1, 1)); }

    // Seeds d(loss)/d(loss) = 1 and sweeps the tape once. loss must be 1x1.
    void backward(Var loss);

    const Mat& value(Var v) const;
    // Gradient accumulated into v by backward(); zero matrix if untouched.
    Mat grad(Var v) const;

private:
    struct Node {
        Mat value;
        Mat grad;  // lazily allocated on first accumulation
        std::function<void()> back;
        bool needs_grad = false;
    };

    Var push(Mat value, bool needs_grad, std::function<void()> back = {});
    Node& node(Var v);
    const Node& node(Var v) const;
    static void accumulate(Node* target, const Mat& g);

    std::deque<Node> nodes_;
    bool grad_enabled_ = true;
    bool backward_done_ = false;
};

}  // namespace frsum::ad
