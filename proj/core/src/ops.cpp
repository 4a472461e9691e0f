#include "maskgen/ops.hpp"

#include <cmath>

#include "maskgen/errors.hpp"

namespace maskgen::ops {
namespace {

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

bool wants(Node& self, std::size_t i) { return self.parents[i]->requires_grad; }

}  // namespace

Var constant(Tensor value) { return Var(std::move(value), false); }

Var matmul(const Var& a, const Var& b) {
  return make_node(kernels::matmul(a.value(), b.value()), {a, b}, [](Node& self) {
    if (wants(self, 0)) parent(self, 0).accumulate(kernels::matmul_nt(self.grad, parent(self, 1).value));
    if (wants(self, 1)) parent(self, 1).accumulate(kernels::matmul_tn(parent(self, 0).value, self.grad));
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  return make_node(kernels::matmul_nt(a.value(), b.value()), {a, b}, [](Node& self) {
    if (wants(self, 0)) parent(self, 0).accumulate(kernels::matmul(self.grad, parent(self, 1).value));
    if (wants(self, 1)) parent(self, 1).accumulate(kernels::matmul_tn(self.grad, parent(self, 0).value));
  });
}

Var affine(const Var& x, const Var& w, const Var& b) {
  return make_node(kernels::affine(x.value(), w.value(), b.value()), {x, w, b}, [](Node& self) {
    const Tensor& g = self.grad;
    if (wants(self, 0)) parent(self, 0).accumulate(kernels::matmul_nt(g, parent(self, 1).value).reshaped(parent(self, 0).value.shape()));
    if (wants(self, 1)) parent(self, 1).accumulate(kernels::matmul_tn(parent(self, 0).value.reshaped({g.rows(), parent(self, 1).value.rows()}), g));
    if (wants(self, 2)) {
      Tensor db({g.cols()});
      for (std::size_t i = 0; i < g.rows(); ++i) {
        auto r = g.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) db[j] += r[j];
      }
      parent(self, 2).accumulate(db);
    }
  });
}

Var add(const Var& a, const Var& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  Tensor out = a.value();
  auto dst = out.values();
  auto src = b.value().values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  return make_node(std::move(out), {a, b}, [](Node& self) {
    if (wants(self, 0)) parent(self, 0).accumulate(self.grad);
    if (wants(self, 1)) parent(self, 1).accumulate(self.grad);
  });
}

Var add_constant(const Var& a, const Tensor& c) {
  if (a.shape() != c.shape()) {
    throw ShapeError("add_constant: " + shape_string(a.shape()) + " vs " + shape_string(c.shape()));
  }
  Tensor out = a.value();
  auto dst = out.values();
  auto src = c.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  return make_node(std::move(out), {a}, [](Node& self) { parent(self, 0).accumulate(self.grad); });
}

Var add_bias(const Var& x, const Var& b) {
  const Tensor& in = x.value();
  if (b.value().size() != in.cols()) {
    throw ShapeError("add_bias: " + shape_string(b.shape()) + " vs " + shape_string(in.shape()));
  }
  Tensor out = in;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += b.value()[j];
  }
  return make_node(std::move(out), {x, b}, [](Node& self) {
    const Tensor& g = self.grad;
    if (wants(self, 0)) parent(self, 0).accumulate(g);
    if (wants(self, 1)) {
      Tensor db(parent(self, 1).value.shape());
      for (std::size_t i = 0; i < g.rows(); ++i) {
        auto r = g.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) db[j] += r[j];
      }
      parent(self, 1).accumulate(db);
    }
  });
}

Var scale(const Var& a, Scalar factor) {
  Tensor out = a.value();
  for (auto& v : out.values()) v *= factor;
  return make_node(std::move(out), {a}, [factor](Node& self) {
    Tensor g = self.grad;
    for (auto& v : g.values()) v *= factor;
    parent(self, 0).accumulate(g);
  });
}

Var gelu(const Var& x) {
  return make_node(kernels::gelu(x.value()), {x}, [](Node& self) {
    const Tensor& in = parent(self, 0).value;
    Tensor g = self.grad;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= kernels::gelu_derivative(in[i]);
    parent(self, 0).accumulate(g);
  });
}

Var softmax_rows(const Var& x) {
  return make_node(kernels::softmax_rows(x.value()), {x}, [](Node& self) {
    const Tensor& y = self.value;
    Tensor g = self.grad;
    for (std::size_t i = 0; i < g.rows(); ++i) {
      auto gr = g.row(i);
      auto yr = y.row(i);
      Scalar dot = 0;
      for (std::size_t j = 0; j < gr.size(); ++j) dot += gr[j] * yr[j];
      for (std::size_t j = 0; j < gr.size(); ++j) gr[j] = yr[j] * (gr[j] - dot);
    }
    parent(self, 0).accumulate(g);
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, Scalar eps) {
  const Tensor& in = x.value();
  Tensor out = kernels::layer_norm(in, gain.value(), bias.value(), eps);
  return make_node(std::move(out), {x, gain, bias}, [eps](Node& self) {
    const Tensor& in = parent(self, 0).value;
    const Tensor& gamma = parent(self, 1).value;
    const Tensor& g = self.grad;
    const std::size_t d = in.cols();
    const auto fd = static_cast<Scalar>(d);
    Tensor dx(in.shape());
    Tensor dgain({d});
    Tensor dbias({d});
    std::vector<Scalar> xhat(d);
    std::vector<Scalar> dxhat(d);
    for (std::size_t i = 0; i < in.rows(); ++i) {
      auto r = in.row(i);
      auto gr = g.row(i);
      Scalar mean = 0;
      for (Scalar v : r) mean += v;
      mean /= fd;
      Scalar var = 0;
      for (Scalar v : r) var += (v - mean) * (v - mean);
      var /= fd;
      const Scalar inv_std = 1.0 / std::sqrt(var + eps);
      Scalar sum_dxhat = 0;
      Scalar sum_dxhat_xhat = 0;
      for (std::size_t j = 0; j < d; ++j) {
        xhat[j] = (r[j] - mean) * inv_std;
        dxhat[j] = gr[j] * gamma[j];
        sum_dxhat += dxhat[j];
        sum_dxhat_xhat += dxhat[j] * xhat[j];
        dgain[j] += gr[j] * xhat[j];
        dbias[j] += gr[j];
      }
      auto out = dx.row(i);
      for (std::size_t j = 0; j < d; ++j) {
        out[j] = inv_std * (dxhat[j] - sum_dxhat / fd - xhat[j] * sum_dxhat_xhat / fd);
      }
    }
    if (wants(self, 0)) parent(self, 0).accumulate(dx);
    if (wants(self, 1)) parent(self, 1).accumulate(dgain);
    if (wants(self, 2)) parent(self, 2).accumulate(dbias);
  });
}

Var gather_rows(const Var& table, std::span<const std::size_t> rows) {
  const Tensor& t = table.value();
  const std::size_t d = t.cols();
  Tensor out({rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= t.rows()) {
      throw ShapeError("gather_rows index " + std::to_string(rows[i]) + " outside " +
                       shape_string(t.shape()));
    }
    auto src = t.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return make_node(std::move(out), {table}, [idx = std::move(idx)](Node& self) {
    Tensor g(parent(self, 0).value.shape());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto src = self.grad.row(i);
      auto dst = g.row(idx[i]);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
    }
    parent(self, 0).accumulate(g);
  });
}

Var select_rows(const Var& x, std::span<const std::size_t> rows) { return gather_rows(x, rows); }

Var scatter_rows(std::span<const Var> parts, std::span<const std::vector<std::size_t>> dest,
                 std::size_t total_rows) {
  if (parts.size() != dest.size()) throw ShapeError("scatter_rows: parts/destinations mismatch");
  std::size_t d = 0;
  for (const auto& p : parts) {
    if (p.value().rows() > 0) d = p.value().cols();
  }
  Tensor out({total_rows, d});
  std::vector<bool> filled(total_rows, false);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    if (v.rows() != dest[k].size() || (v.rows() > 0 && v.cols() != d)) {
      throw ShapeError("scatter_rows: part " + std::to_string(k) + " has shape " +
                       shape_string(v.shape()));
    }
    for (std::size_t i = 0; i < dest[k].size(); ++i) {
      const std::size_t r = dest[k][i];
      if (r >= total_rows || filled[r]) throw ShapeError("scatter_rows: bad destination row");
      filled[r] = true;
      auto src = v.row(i);
      std::copy(src.begin(), src.end(), out.row(r).begin());
    }
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  std::vector<std::vector<std::size_t>> ds(dest.begin(), dest.end());
  return make_node(std::move(out), ps, [ds = std::move(ds)](Node& self) {
    for (std::size_t k = 0; k < ds.size(); ++k) {
      if (!wants(self, k)) continue;
      Tensor g(parent(self, k).value.shape());
      for (std::size_t i = 0; i < ds[k].size(); ++i) {
        auto src = self.grad.row(ds[k][i]);
        std::copy(src.begin(), src.end(), g.row(i).begin());
      }
      parent(self, k).accumulate(g);
    }
  });
}

Var slice_cols(const Var& x, std::size_t begin, std::size_t count) {
  const Tensor& in = x.value();
  if (begin + count > in.cols()) throw ShapeError("slice_cols out of range");
  Tensor out({in.rows(), count});
  for (std::size_t i = 0; i < in.rows(); ++i) {
    auto src = in.row(i).subspan(begin, count);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return make_node(std::move(out), {x}, [begin, count](Node& self) {
    Tensor g(parent(self, 0).value.shape());
    for (std::size_t i = 0; i < g.rows(); ++i) {
      auto src = self.grad.row(i);
      std::copy(src.begin(), src.end(), g.row(i).subspan(begin, count).begin());
    }
    parent(self, 0).accumulate(g);
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  const std::size_t n = parts.front().value().rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.value().rows() != n) throw ShapeError("concat_cols row mismatch");
    total += p.value().cols();
  }
  Tensor out({n, total});
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t i = 0; i < n; ++i) {
      auto src = v.row(i);
      std::copy(src.begin(), src.end(), out.row(i).subspan(offset).begin());
    }
    offset += v.cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return make_node(std::move(out), ps, [](Node& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      const std::size_t c = parent(self, k).value.cols();
      if (wants(self, k)) {
        Tensor g(parent(self, k).value.shape());
        for (std::size_t i = 0; i < g.rows(); ++i) {
          auto src = self.grad.row(i).subspan(offset, c);
          std::copy(src.begin(), src.end(), g.row(i).begin());
        }
        parent(self, k).accumulate(g);
      }
      offset += c;
    }
  });
}

Var dropout(const Var& x, Scalar rate, Rng& rng) {
  if (rate <= 0) return x;
  if (rate >= 1) throw ShapeError("dropout rate must be below 1");
  const Scalar inv = 1.0 / (1.0 - rate);
  Tensor mask(x.shape());
  for (auto& m : mask.values()) m = rng.bernoulli(rate) ? 0.0 : inv;
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return make_node(std::move(out), {x}, [mask = std::move(mask)](Node& self) {
    Tensor g = self.grad;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask[i];
    parent(self, 0).accumulate(g);
  });
}

Var cross_entropy(const Var& logits, std::span<const TokenId> targets, TokenId ignore_id) {
  const Scalar loss = kernels::cross_entropy(logits.value(), targets, ignore_id);
  std::vector<TokenId> t(targets.begin(), targets.end());
  return make_node(Tensor::scalar(loss), {logits}, [t = std::move(t), ignore_id](Node& self) {
    const Tensor& z = parent(self, 0).value;
    Tensor g = kernels::softmax_rows(z);
    std::size_t counted = 0;
    for (TokenId id : t) counted += id != ignore_id;
    const Scalar upstream = self.grad[0] / static_cast<Scalar>(counted);
    for (std::size_t i = 0; i < t.size(); ++i) {
      auto r = g.row(i);
      if (t[i] == ignore_id) {
        std::fill(r.begin(), r.end(), 0.0);
        continue;
      }
      r[static_cast<std::size_t>(t[i])] -= 1.0;
      for (auto& v : r) v *= upstream;
    }
    parent(self, 0).accumulate(g);
  });
}

Var sum(const Var& x) {
  Scalar total = 0;
  for (Scalar v : x.value().values()) total += v;
  return make_node(Tensor::scalar(total), {x}, [](Node& self) {
    parent(self, 0).accumulate(Tensor(parent(self, 0).value.shape(), self.grad[0]));
  });
}

Var sum_squares(const Var& x) {
  Scalar total = 0;
  for (Scalar v : x.value().values()) total += v * v;
  return make_node(Tensor::scalar(total), {x}, [](Node& self) {
    Tensor g = parent(self, 0).value;
    for (auto& v : g.values()) v *= 2.0 * self.grad[0];
    parent(self, 0).accumulate(g);
  });
}

}  // namespace maskgen::ops
