#include "maskgen/autograd.hpp"

#include <unordered_set>

#include "maskgen/errors.hpp"

namespace maskgen {

void Node::accumulate(const Tensor& g) {
  if (grad.empty()) {
    grad = g;
    return;
  }
  if (grad.shape() != g.shape()) {
    throw ShapeError("gradient " + shape_string(g.shape()) + " does not match " +
                     shape_string(grad.shape()));
  }
  auto dst = grad.values();
  auto src = g.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

const Tensor& Var::value() const {
  if (!node_) throw StateError("access to an undefined variable");
  return node_->value;
}

const Tensor& Var::grad() const {
  if (!node_) throw StateError("access to an undefined variable");
  return node_->grad;
}

Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  for (const auto& p : parents) {
    if (p.requires_grad()) {
      node->requires_grad = true;
      break;
    }
  }
  if (node->requires_grad) {
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node());
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

void backward(const Var& root) {
  if (!root.defined()) throw StateError("backward called without a recorded forward pass");
  Node* top = root.node().get();
  if (top->consumed) throw StateError("backward called twice on the same forward pass");
  if (top->value.size() != 1) {
    throw ShapeError("backward root must be a scalar, got " + shape_string(top->value.shape()));
  }
  if (!top->requires_grad) {
    top->consumed = true;
    return;
  }

  // Iterative post-order DFS over nodes that need a gradient.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{top, 0}};
  visited.insert(top);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  top->accumulate(Tensor(top->value.shape(), 1.0));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
  for (Node* node : order) {
    if (node->backward) {
      node->backward = nullptr;
      node->parents.clear();
      node->grad = Tensor();
    }
  }
  top->consumed = true;
}

Parameter::Parameter(std::string id, Tensor value, ParamGroup group, bool trainable)
    : id_(std::move(id)), group_(group), node_(std::make_shared<Node>()) {
  node_->grad = Tensor(value.shape());
  node_->value = std::move(value);
  node_->requires_grad = trainable;
}

Parameter::Parameter(const Parameter& other)
    : id_(other.id_), group_(other.group_), node_(std::make_shared<Node>()) {
  node_->value = other.node_->value;
  node_->grad = other.node_->grad;
  node_->requires_grad = other.node_->requires_grad;
}

Parameter& Parameter::operator=(const Parameter& other) {
  if (this != &other) *this = Parameter(other);
  return *this;
}

void Parameter::set_trainable(bool trainable) {
  node_->requires_grad = trainable;
  if (!trainable) zero_grad();
}

void Parameter::zero_grad() {
  if (node_->grad.shape() != node_->value.shape()) {
    node_->grad = Tensor(node_->value.shape());
  } else {
    node_->grad.fill(0);
  }
}

std::size_t ParameterStore::add(std::string id, Tensor value, ParamGroup group) {
  if (find(id)) throw StateError("duplicate parameter id " + id);
  params_.emplace_back(std::move(id), std::move(value), group);
  return params_.size() - 1;
}

Parameter& ParameterStore::at(const std::string& id) {
  for (auto& p : params_) {
    if (p.id() == id) return p;
  }
  throw StateError("no parameter named " + id);
}

const Parameter& ParameterStore::at(const std::string& id) const {
  const Parameter* p = find(id);
  if (!p) throw StateError("no parameter named " + id);
  return *p;
}

const Parameter* ParameterStore::find(const std::string& id) const {
  for (const auto& p : params_) {
    if (p.id() == id) return &p;
  }
  return nullptr;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void ParameterStore::set_trainable(ParamGroup group, bool trainable) {
  for (auto& p : params_) {
    if (p.group() == group) p.set_trainable(trainable);
  }
}

}  // namespace maskgen
