#include "atcl/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace atcl {

namespace {

void check_finite(const Tensor& t, const char* op) {
#ifndef NDEBUG
    for (double v : t.value) {
        if (!std::isfinite(v))
            throw InternalError(std::string("non-finite value produced by ") + op);
    }
#else
    (void)t;
    (void)op;
#endif
}

TensorPtr make_node(Shape shape, std::vector<TensorPtr> parents) {
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->value.assign(shape_numel(t->shape), 0.0);
    t->parents = std::move(parents);
    return t;
}

void require_2d(const TensorPtr& t, const char* op) {
    require(t && t->shape.size() == 2, std::string(op) + ": expected rank-2 tensor");
}

// out(R,C) += a(R,K) * b(K,C), cache-friendly i-k-j order.
void gemm_acc(const double* a, const double* b, double* out,
              std::size_t R, std::size_t K, std::size_t C) {
    for (std::size_t i = 0; i < R; ++i) {
        const double* ai = a + i * K;
        double* oi = out + i * C;
        for (std::size_t k = 0; k < K; ++k) {
            const double aik = ai[k];
            if (aik == 0.0) continue;
            const double* bk = b + k * C;
            for (std::size_t j = 0; j < C; ++j) oi[j] += aik * bk[j];
        }
    }
}

// out(R,C) += a(K,R)^T * b(K,C)
void gemm_at_acc(const double* a, const double* b, double* out,
                 std::size_t K, std::size_t R, std::size_t C) {
    for (std::size_t k = 0; k < K; ++k) {
        const double* ak = a + k * R;
        const double* bk = b + k * C;
        for (std::size_t i = 0; i < R; ++i) {
            const double aki = ak[i];
            if (aki == 0.0) continue;
            double* oi = out + i * C;
            for (std::size_t j = 0; j < C; ++j) oi[j] += aki * bk[j];
        }
    }
}

// out(R,K) += a(R,C) * b(K,C)^T
void gemm_bt_acc(const double* a, const double* b, double* out,
                 std::size_t R, std::size_t C, std::size_t K) {
    for (std::size_t i = 0; i < R; ++i) {
        const double* ai = a + i * C;
        double* oi = out + i * K;
        for (std::size_t k = 0; k < K; ++k) {
            const double* bk = b + k * C;
            double acc = 0.0;
            for (std::size_t j = 0; j < C; ++j) acc += ai[j] * bk[j];
            oi[k] += acc;
        }
    }
}

} // namespace

void softmax_inplace(double* row, std::size_t n) {
    double m = row[0];
    for (std::size_t j = 1; j < n; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        row[j] = std::exp(row[j] - m);
        z += row[j];
    }
    for (std::size_t j = 0; j < n; ++j) row[j] /= z;
}

double log_sum_exp(const double* row, std::size_t n) {
    double m = row[0];
    for (std::size_t j = 1; j < n; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(row[j] - m);
    return m + std::log(z);
}

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    const std::size_t R = a->shape[0], K = a->shape[1], C = b->shape[1];
    require(b->shape[0] == K, "matmul: inner dimensions disagree");
    auto out = make_node({R, C}, {a, b});
    gemm_acc(a->value.data(), b->value.data(), out->value.data(), R, K, C);
    out->backprop = [R, K, C](Tensor& self) {
        Tensor& A = *self.parents[0];
        Tensor& B = *self.parents[1];
        gemm_bt_acc(self.grad.data(), B.value.data(), A.grad.data(), R, C, K);
        gemm_at_acc(A.value.data(), self.grad.data(), B.grad.data(), R, K, C);
    };
    check_finite(*out, "matmul");
    return out;
}

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    require(a->shape == b->shape, "add: shape mismatch");
    auto out = make_node(a->shape, {a, b});
    for (std::size_t i = 0; i < out->size(); ++i) out->value[i] = a->value[i] + b->value[i];
    out->backprop = [](Tensor& self) {
        for (std::size_t i = 0; i < self.size(); ++i) {
            self.parents[0]->grad[i] += self.grad[i];
            self.parents[1]->grad[i] += self.grad[i];
        }
    };
    check_finite(*out, "add");
    return out;
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
    require(a->shape == b->shape, "sub: shape mismatch");
    auto out = make_node(a->shape, {a, b});
    for (std::size_t i = 0; i < out->size(); ++i) out->value[i] = a->value[i] - b->value[i];
    out->backprop = [](Tensor& self) {
        for (std::size_t i = 0; i < self.size(); ++i) {
            self.parents[0]->grad[i] += self.grad[i];
            self.parents[1]->grad[i] -= self.grad[i];
        }
    };
    check_finite(*out, "sub");
    return out;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    require(a->shape == b->shape, "mul: shape mismatch");
    auto out = make_node(a->shape, {a, b});
    for (std::size_t i = 0; i < out->size(); ++i) out->value[i] = a->value[i] * b->value[i];
    out->backprop = [](Tensor& self) {
        for (std::size_t i = 0; i < self.size(); ++i) {
            self.parents[0]->grad[i] += self.grad[i] * self.parents[1]->value[i];
            self.parents[1]->grad[i] += self.grad[i] * self.parents[0]->value[i];
        }
    };
    check_finite(*out, "mul");
    return out;
}

TensorPtr scale(const TensorPtr& a, double c) {
    auto out = make_node(a->shape, {a});
    for (std::size_t i = 0; i < out->size(); ++i) out->value[i] = a->value[i] * c;
    out->backprop = [c](Tensor& self) {
        for (std::size_t i = 0; i < self.size(); ++i)
            self.parents[0]->grad[i] += self.grad[i] * c;
    };
    check_finite(*out, "scale");
    return out;
}

TensorPtr add_bias(const TensorPtr& a, const TensorPtr& bias) {
    require_2d(a, "add_bias");
    require(bias->shape.size() == 1 && bias->shape[0] == a->shape[1],
            "add_bias: bias length must equal row width");
    const std::size_t R = a->shape[0], C = a->shape[1];
    auto out = make_node(a->shape, {a, bias});
    for (std::size_t i = 0; i < R; ++i)
        for (std::size_t j = 0; j < C; ++j)
            out->value[i * C + j] = a->value[i * C + j] + bias->value[j];
    out->backprop = [R, C](Tensor& self) {
        for (std::size_t i = 0; i < R; ++i)
            for (std::size_t j = 0; j < C; ++j) {
                self.parents[0]->grad[i * C + j] += self.grad[i * C + j];
                self.parents[1]->grad[j] += self.grad[i * C + j];
            }
    };
    check_finite(*out, "add_bias");
    return out;
}

TensorPtr embedding_lookup(const TensorPtr& table, const std::vector<int>& ids) {
    require_2d(table, "embedding_lookup");
    const std::size_t V = table->shape[0], D = table->shape[1];
    for (int id : ids)
        require(id >= 0 && static_cast<std::size_t>(id) < V,
                "embedding_lookup: token id out of range");
    auto out = make_node({ids.size(), D}, {table});
    for (std::size_t r = 0; r < ids.size(); ++r)
        std::memcpy(out->value.data() + r * D,
                    table->value.data() + static_cast<std::size_t>(ids[r]) * D,
                    D * sizeof(double));
    out->backprop = [ids, D](Tensor& self) {
        for (std::size_t r = 0; r < ids.size(); ++r) {
            double* dst = self.parents[0]->grad.data() + static_cast<std::size_t>(ids[r]) * D;
            const double* src = self.grad.data() + r * D;
            for (std::size_t j = 0; j < D; ++j) dst[j] += src[j];
        }
    };
    return out;
}

TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gain,
                     const TensorPtr& shift, double eps) {
    require_2d(x, "layer_norm");
    const std::size_t R = x->shape[0], C = x->shape[1];
    require(gain->shape == Shape{C} && shift->shape == Shape{C},
            "layer_norm: gain/shift must match row width");
    auto out = make_node(x->shape, {x, gain, shift});
    std::vector<double> xhat(R * C), inv_sigma(R);
    for (std::size_t i = 0; i < R; ++i) {
        const double* xi = x->value.data() + i * C;
        double mu = 0.0;
        for (std::size_t j = 0; j < C; ++j) mu += xi[j];
        mu /= double(C);
        double var = 0.0;
        for (std::size_t j = 0; j < C; ++j) var += (xi[j] - mu) * (xi[j] - mu);
        var /= double(C);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_sigma[i] = is;
        for (std::size_t j = 0; j < C; ++j) {
            xhat[i * C + j] = (xi[j] - mu) * is;
            out->value[i * C + j] = xhat[i * C + j] * gain->value[j] + shift->value[j];
        }
    }
    out->backprop = [R, C, xhat = std::move(xhat),
                     inv_sigma = std::move(inv_sigma)](Tensor& self) {
        Tensor& X = *self.parents[0];
        Tensor& G = *self.parents[1];
        Tensor& S = *self.parents[2];
        for (std::size_t i = 0; i < R; ++i) {
            const double* dy = self.grad.data() + i * C;
            const double* xh = xhat.data() + i * C;
            double sum_gdy = 0.0, sum_gdy_xh = 0.0;
            for (std::size_t j = 0; j < C; ++j) {
                const double gdy = dy[j] * G.value[j];
                sum_gdy += gdy;
                sum_gdy_xh += gdy * xh[j];
                G.grad[j] += dy[j] * xh[j];
                S.grad[j] += dy[j];
            }
            const double is = inv_sigma[i];
            for (std::size_t j = 0; j < C; ++j) {
                const double gdy = dy[j] * G.value[j];
                X.grad[i * C + j] +=
                    is * (gdy - sum_gdy / double(C) - xh[j] * sum_gdy_xh / double(C));
            }
        }
    };
    check_finite(*out, "layer_norm");
    return out;
}

TensorPtr softmax_rows(const TensorPtr& x) {
    require_2d(x, "softmax_rows");
    const std::size_t R = x->shape[0], C = x->shape[1];
    auto out = make_node(x->shape, {x});
    for (std::size_t i = 0; i < R; ++i) {
        std::memcpy(out->value.data() + i * C, x->value.data() + i * C, C * sizeof(double));
        softmax_inplace(out->value.data() + i * C, C);
    }
    out->backprop = [R, C](Tensor& self) {
        for (std::size_t i = 0; i < R; ++i) {
            const double* y = self.value.data() + i * C;
            const double* dy = self.grad.data() + i * C;
            double dot = 0.0;
            for (std::size_t j = 0; j < C; ++j) dot += y[j] * dy[j];
            double* dx = self.parents[0]->grad.data() + i * C;
            for (std::size_t j = 0; j < C; ++j) dx[j] += y[j] * (dy[j] - dot);
        }
    };
    check_finite(*out, "softmax_rows");
    return out;
}

TensorPtr relu(const TensorPtr& x) {
    auto out = make_node(x->shape, {x});
    for (std::size_t i = 0; i < out->size(); ++i)
        out->value[i] = x->value[i] > 0.0 ? x->value[i] : 0.0;
    out->backprop = [](Tensor& self) {
        for (std::size_t i = 0; i < self.size(); ++i)
            if (self.parents[0]->value[i] > 0.0)
                self.parents[0]->grad[i] += self.grad[i];
    };
    return out;
}

TensorPtr attention(const TensorPtr& q, const TensorPtr& k, const TensorPtr& v,
                    const std::vector<std::uint8_t>& attend_mask,
                    std::size_t batch, std::size_t n_heads) {
    require(q->shape.size() == 3 && k->shape.size() == 3 && k->shape == v->shape,
            "attention: expected (B*H, N, Dh) tensors");
    const std::size_t BH = q->shape[0], Nq = q->shape[1], Dh = q->shape[2];
    const std::size_t Nk = k->shape[1];
    require(k->shape[0] == BH && k->shape[2] == Dh, "attention: q/k dims disagree");
    require(BH == batch * n_heads, "attention: leading dim must be batch*heads");
    require(attend_mask.size() == batch * Nq * Nk, "attention: mask size mismatch");
    const double sc = 1.0 / std::sqrt(double(Dh));

    auto out = make_node({BH, Nq, Dh}, {q, k, v});
    std::vector<double> probs(BH * Nq * Nk, 0.0);
    std::vector<double> row(Nk);
    for (std::size_t bh = 0; bh < BH; ++bh) {
        const std::size_t b = bh / n_heads;
        const double* Q = q->value.data() + bh * Nq * Dh;
        const double* K = k->value.data() + bh * Nk * Dh;
        const double* V = v->value.data() + bh * Nk * Dh;
        double* O = out->value.data() + bh * Nq * Dh;
        for (std::size_t i = 0; i < Nq; ++i) {
            const std::uint8_t* mrow = attend_mask.data() + (b * Nq + i) * Nk;
            bool any = false;
            for (std::size_t j = 0; j < Nk; ++j) {
                if (mrow[j]) {
                    double s = 0.0;
                    for (std::size_t d = 0; d < Dh; ++d) s += Q[i * Dh + d] * K[j * Dh + d];
                    row[j] = s * sc;
                    any = true;
                } else {
                    row[j] = -1e30;
                }
            }
            double* prow = probs.data() + (bh * Nq + i) * Nk;
            if (!any) {
                // fully masked query row attends to nothing and outputs zeros
                std::fill(prow, prow + Nk, 0.0);
                continue;
            }
            std::memcpy(prow, row.data(), Nk * sizeof(double));
            softmax_inplace(prow, Nk);
            for (std::size_t j = 0; j < Nk; ++j)
                if (!mrow[j]) prow[j] = 0.0;
            for (std::size_t d = 0; d < Dh; ++d) {
                double acc = 0.0;
                for (std::size_t j = 0; j < Nk; ++j) acc += prow[j] * V[j * Dh + d];
                O[i * Dh + d] = acc;
            }
        }
    }
    out->backprop = [BH, Nq, Nk, Dh, sc, n_heads, attend_mask,
                     probs = std::move(probs)](Tensor& self) {
        Tensor& Qt = *self.parents[0];
        Tensor& Kt = *self.parents[1];
        Tensor& Vt = *self.parents[2];
        std::vector<double> dA(Nk), dS(Nk);
        for (std::size_t bh = 0; bh < BH; ++bh) {
            const std::size_t b = bh / n_heads;
            const double* Q = Qt.value.data() + bh * Nq * Dh;
            const double* K = Kt.value.data() + bh * Nk * Dh;
            const double* V = Vt.value.data() + bh * Nk * Dh;
            double* dQ = Qt.grad.data() + bh * Nq * Dh;
            double* dK = Kt.grad.data() + bh * Nk * Dh;
            double* dV = Vt.grad.data() + bh * Nk * Dh;
            const double* dO = self.grad.data() + bh * Nq * Dh;
            for (std::size_t i = 0; i < Nq; ++i) {
                const double* A = probs.data() + (bh * Nq + i) * Nk;
                const std::uint8_t* mrow = attend_mask.data() + (b * Nq + i) * Nk;
                // dV and dA
                double dot = 0.0;
                for (std::size_t j = 0; j < Nk; ++j) {
                    double da = 0.0;
                    for (std::size_t d = 0; d < Dh; ++d)
                        da += dO[i * Dh + d] * V[j * Dh + d];
                    dA[j] = da;
                    dot += A[j] * da;
                    for (std::size_t d = 0; d < Dh; ++d)
                        dV[j * Dh + d] += A[j] * dO[i * Dh + d];
                }
                // softmax backward restricted to unmasked entries
                for (std::size_t j = 0; j < Nk; ++j)
                    dS[j] = mrow[j] ? A[j] * (dA[j] - dot) : 0.0;
                for (std::size_t j = 0; j < Nk; ++j) {
                    if (dS[j] == 0.0) continue;
                    const double g = dS[j] * sc;
                    for (std::size_t d = 0; d < Dh; ++d) {
                        dQ[i * Dh + d] += g * K[j * Dh + d];
                        dK[j * Dh + d] += g * Q[i * Dh + d];
                    }
                }
            }
        }
    };
    check_finite(*out, "attention");
    return out;
}

TensorPtr split_heads(const TensorPtr& x, std::size_t batch, std::size_t seq,
                      std::size_t n_heads) {
    require_2d(x, "split_heads");
    const std::size_t D = x->shape[1];
    require(x->shape[0] == batch * seq, "split_heads: row count must be batch*seq");
    require(D % n_heads == 0, "split_heads: d_model not divisible by heads");
    const std::size_t Dh = D / n_heads;
    auto out = make_node({batch * n_heads, seq, Dh}, {x});
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t n = 0; n < seq; ++n)
            for (std::size_t h = 0; h < n_heads; ++h)
                std::memcpy(out->value.data() + (((b * n_heads + h) * seq + n) * Dh),
                            x->value.data() + ((b * seq + n) * D + h * Dh),
                            Dh * sizeof(double));
    out->backprop = [batch, seq, n_heads, D, Dh](Tensor& self) {
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t n = 0; n < seq; ++n)
                for (std::size_t h = 0; h < n_heads; ++h) {
                    const double* src =
                        self.grad.data() + (((b * n_heads + h) * seq + n) * Dh);
                    double* dst =
                        self.parents[0]->grad.data() + ((b * seq + n) * D + h * Dh);
                    for (std::size_t d = 0; d < Dh; ++d) dst[d] += src[d];
                }
    };
    return out;
}

TensorPtr merge_heads(const TensorPtr& x, std::size_t batch, std::size_t seq,
                      std::size_t n_heads) {
    require(x->shape.size() == 3 && x->shape[0] == batch * n_heads && x->shape[1] == seq,
            "merge_heads: expected (B*H, N, Dh)");
    const std::size_t Dh = x->shape[2], D = Dh * n_heads;
    auto out = make_node({batch * seq, D}, {x});
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t n = 0; n < seq; ++n)
            for (std::size_t h = 0; h < n_heads; ++h)
                std::memcpy(out->value.data() + ((b * seq + n) * D + h * Dh),
                            x->value.data() + (((b * n_heads + h) * seq + n) * Dh),
                            Dh * sizeof(double));
    out->backprop = [batch, seq, n_heads, D, Dh](Tensor& self) {
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t n = 0; n < seq; ++n)
                for (std::size_t h = 0; h < n_heads; ++h) {
                    const double* src =
                        self.grad.data() + ((b * seq + n) * D + h * Dh);
                    double* dst =
                        self.parents[0]->grad.data() + (((b * n_heads + h) * seq + n) * Dh);
                    for (std::size_t d = 0; d < Dh; ++d) dst[d] += src[d];
                }
    };
    return out;
}

TensorPtr cross_entropy_logits(const TensorPtr& logits, const std::vector<int>& targets,
                               const std::vector<std::uint8_t>& valid) {
    require_2d(logits, "cross_entropy_logits");
    const std::size_t R = logits->shape[0], V = logits->shape[1];
    require(targets.size() == R && valid.size() == R,
            "cross_entropy_logits: targets/valid must have one entry per row");
    std::size_t n_valid = 0;
    for (std::size_t r = 0; r < R; ++r) {
        if (!valid[r]) continue;
        require(targets[r] >= 0 && static_cast<std::size_t>(targets[r]) < V,
                "cross_entropy_logits: target id out of range");
        ++n_valid;
    }
    require(n_valid > 0, "cross_entropy_logits: all positions are masked out");

    auto out = make_node({1}, {logits});
    std::vector<double> probs(R * V, 0.0);
    double total = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
        if (!valid[r]) continue;
        const double* z = logits->value.data() + r * V;
        double* p = probs.data() + r * V;
        std::memcpy(p, z, V * sizeof(double));
        softmax_inplace(p, V);
        total += log_sum_exp(z, V) - z[targets[r]];
    }
    out->value[0] = total / double(n_valid);
    out->backprop = [R, V, targets, valid, n_valid, probs = std::move(probs)](Tensor& self) {
        const double g = self.grad[0] / double(n_valid);
        double* dz = self.parents[0]->grad.data();
        for (std::size_t r = 0; r < R; ++r) {
            if (!valid[r]) continue;
            const double* p = probs.data() + r * V;
            for (std::size_t j = 0; j < V; ++j) dz[r * V + j] += g * p[j];
            dz[r * V + static_cast<std::size_t>(targets[r])] -= g;
        }
    };
    check_finite(*out, "cross_entropy_logits");
    return out;
}

TensorPtr sum_all(const TensorPtr& x) {
    auto out = make_node({1}, {x});
    double s = 0.0;
    for (double v : x->value) s += v;
    out->value[0] = s;
    out->backprop = [](Tensor& self) {
        for (double& g : self.parents[0]->grad) g += self.grad[0];
    };
    return out;
}

TensorPtr mean_all(const TensorPtr& x) {
    auto out = make_node({1}, {x});
    double s = 0.0;
    for (double v : x->value) s += v;
    const double inv = 1.0 / double(x->size());
    out->value[0] = s * inv;
    out->backprop = [inv](Tensor& self) {
        for (double& g : self.parents[0]->grad) g += self.grad[0] * inv;
    };
    return out;
}

TensorPtr slice_row(const TensorPtr& x, std::size_t row) {
    require_2d(x, "slice_row");
    const std::size_t R = x->shape[0], C = x->shape[1];
    require(row < R, "slice_row: row out of range");
    auto out = make_node({C}, {x});
    std::memcpy(out->value.data(), x->value.data() + row * C, C * sizeof(double));
    out->backprop = [row, C](Tensor& self) {
        double* dst = self.parents[0]->grad.data() + row * C;
        for (std::size_t j = 0; j < C; ++j) dst[j] += self.grad[j];
    };
    return out;
}

TensorPtr weighted_row_sum(const TensorPtr& x, const std::vector<double>& weights) {
    require_2d(x, "weighted_row_sum");
    const std::size_t R = x->shape[0], C = x->shape[1];
    require(weights.size() == R, "weighted_row_sum: one weight per row required");
    auto out = make_node({C}, {x});
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t j = 0; j < C; ++j)
            out->value[j] += weights[r] * x->value[r * C + j];
    out->backprop = [R, C, weights](Tensor& self) {
        for (std::size_t r = 0; r < R; ++r)
            for (std::size_t j = 0; j < C; ++j)
                self.parents[0]->grad[r * C + j] += weights[r] * self.grad[j];
    };
    return out;
}

namespace {

struct CosParts {
    double c, nu, nv;
    bool degenerate;
};

CosParts cos_parts(const double* u, const double* v, std::size_t n) {
    double uu = 0.0, vv = 0.0, uv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        uu += u[i] * u[i];
        vv += v[i] * v[i];
        uv += u[i] * v[i];
    }
    CosParts p;
    p.nu = std::sqrt(uu);
    p.nv = std::sqrt(vv);
    // zero-vector convention: similarity 0, no gradient
    p.degenerate = (p.nu < 1e-300 || p.nv < 1e-300);
    p.c = p.degenerate ? 0.0 : uv / (p.nu * p.nv);
    return p;
}

// d cos(u,v)/du scaled by g, accumulated into du.
void cos_backprop_u(const double* u, const double* v, std::size_t n,
                    const CosParts& p, double g, double* du) {
    if (p.degenerate) return;
    const double inv_uv = 1.0 / (p.nu * p.nv);
    const double inv_uu = 1.0 / (p.nu * p.nu);
    for (std::size_t i = 0; i < n; ++i)
        du[i] += g * (v[i] * inv_uv - p.c * u[i] * inv_uu);
}

// Same parts viewed from the second argument's side (norms exchanged).
CosParts swapped(const CosParts& p) {
    CosParts q = p;
    std::swap(q.nu, q.nv);
    return q;
}

} // namespace

TensorPtr cosine_similarity(const TensorPtr& u, const TensorPtr& v) {
    require(u->shape == v->shape && u->shape.size() == 1,
            "cosine_similarity: expects two equal-length vectors");
    const std::size_t n = u->size();
    auto out = make_node({1}, {u, v});
    const CosParts p = cos_parts(u->value.data(), v->value.data(), n);
    out->value[0] = p.c;
    out->backprop = [n, p](Tensor& self) {
        const double g = self.grad[0];
        cos_backprop_u(self.parents[0]->value.data(), self.parents[1]->value.data(), n, p, g,
                       self.parents[0]->grad.data());
        cos_backprop_u(self.parents[1]->value.data(), self.parents[0]->value.data(), n,
                       swapped(p), g, self.parents[1]->grad.data());
    };
    return out;
}

TensorPtr l2_norm(const TensorPtr& u) {
    const std::size_t n = u->size();
    auto out = make_node({1}, {u});
    double s = 0.0;
    for (double v : u->value) s += v * v;
    out->value[0] = std::sqrt(s);
    out->backprop = [n](Tensor& self) {
        const double norm = self.value[0];
        if (norm < 1e-300) return; // subgradient 0 at the origin
        const double g = self.grad[0] / norm;
        for (std::size_t i = 0; i < n; ++i)
            self.parents[0]->grad[i] += g * self.parents[0]->value[i];
    };
    return out;
}

TensorPtr info_nce(const TensorPtr& anchor, const TensorPtr& positive,
                   const std::vector<TensorPtr>& negatives, double tau,
                   bool include_positive_in_denominator) {
    require(tau > 0.0, "info_nce: temperature must be positive");
    require(!negatives.empty(), "info_nce: at least one negative required");
    require(anchor->shape.size() == 1 && anchor->shape == positive->shape,
            "info_nce: anchor/positive must be equal-length vectors");
    for (const auto& neg : negatives)
        require(neg->shape == anchor->shape, "info_nce: negative shape mismatch");

    const std::size_t n = anchor->size();
    std::vector<TensorPtr> parents = {anchor, positive};
    parents.insert(parents.end(), negatives.begin(), negatives.end());
    auto out = make_node({1}, std::move(parents));

    const double* a = anchor->value.data();
    CosParts cp = cos_parts(a, positive->value.data(), n);
    std::vector<CosParts> cn(negatives.size());
    std::vector<double> scaled;
    scaled.reserve(negatives.size() + 1);
    for (std::size_t i = 0; i < negatives.size(); ++i) {
        cn[i] = cos_parts(a, negatives[i]->value.data(), n);
        scaled.push_back(cn[i].c / tau);
    }
    if (include_positive_in_denominator) scaled.push_back(cp.c / tau);
    const double lse = log_sum_exp(scaled.data(), scaled.size());
    out->value[0] = -cp.c / tau + lse;

    out->backprop = [n, tau, cp, cn = std::move(cn), lse,
                     include_positive_in_denominator](Tensor& self) {
        const double g = self.grad[0];
        Tensor& A = *self.parents[0];
        Tensor& P = *self.parents[1];
        // dL/dc_pos
        double dpos = -1.0 / tau;
        if (include_positive_in_denominator)
            dpos += std::exp(cp.c / tau - lse) / tau;
        cos_backprop_u(A.value.data(), P.value.data(), n, cp, g * dpos, A.grad.data());
        cos_backprop_u(P.value.data(), A.value.data(), n, swapped(cp), g * dpos,
                       P.grad.data());
        for (std::size_t i = 0; i < cn.size(); ++i) {
            Tensor& Ng = *self.parents[2 + i];
            const double dneg = std::exp(cn[i].c / tau - lse) / tau;
            cos_backprop_u(A.value.data(), Ng.value.data(), n, cn[i], g * dneg, A.grad.data());
            cos_backprop_u(Ng.value.data(), A.value.data(), n, swapped(cn[i]),
                           g * dneg, Ng.grad.data());
        }
    };
    check_finite(*out, "info_nce");
    return out;
}

} // namespace atcl
