#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "maskgen/tensor.hpp"

namespace maskgen {

// One value on the tape. Interior nodes carry a closure that pushes their
// gradient into their parents; leaves carry none.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  bool consumed = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void accumulate(const Tensor& g);
};

// Handle on a tape node. Copies alias the same node.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor& value() const;
  const Tensor& grad() const;
  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  const Shape& shape() const { return value().shape(); }

  const std::shared_ptr<Node>& node() const noexcept { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Builds an interior node. If no parent requires a gradient the result is a
// constant and the closure is dropped.
Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward);

// Reverse-mode sweep from a scalar root. Gradients accumulate into every leaf
// that requires one; interior state is released afterwards, so a root can be
// swept only once.
void backward(const Var& root);

enum class ParamGroup {
  kBackbone,    // transformer weights, embeddings and decoding head
  kProjection,  // the cross-modal projection
};

class Parameter {
 public:
  Parameter(std::string id, Tensor value, ParamGroup group, bool trainable = true);
  Parameter(const Parameter& other);
  Parameter& operator=(const Parameter& other);
  Parameter(Parameter&&) noexcept = default;
  Parameter& operator=(Parameter&&) noexcept = default;

  const std::string& id() const noexcept { return id_; }
  ParamGroup group() const noexcept { return group_; }

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  Tensor& mutable_grad() { return node_->grad; }

  bool trainable() const noexcept { return node_->requires_grad; }
  void set_trainable(bool trainable);
  void zero_grad();

  // Leaf variable sharing this parameter's storage.
  Var var() const { return Var(node_); }

 private:
  std::string id_;
  ParamGroup group_;
  std::shared_ptr<Node> node_;
};

// Parameters in registration order with lookup by id.
class ParameterStore {
 public:
  std::size_t add(std::string id, Tensor value, ParamGroup group);

  std::size_t size() const noexcept { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  Parameter& at(const std::string& id);
  const Parameter& at(const std::string& id) const;
  const Parameter* find(const std::string& id) const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  void set_trainable(ParamGroup group, bool trainable);

 private:
  std::vector<Parameter> params_;
};

}  // namespace maskgen
