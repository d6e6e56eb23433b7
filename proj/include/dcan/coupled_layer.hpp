#ifndef DCAN_COUPLED_LAYER_HPP
#define DCAN_COUPLED_LAYER_HPP

#include "dcan/common.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <string>

namespace dcan {

/// Parameters of one coupled layer. Each view has a tied-weight auto-encoder:
/// encoder s(W x + b), decoder s(W^T h + c). W is hidden x input.
struct LayerParams {
  Matrix w_x;
  Matrix w_y;
  Vector b_x;
  Vector b_y;
  Vector c_x;
  Vector c_y;
  double gain = 1.0;

  Index input_dim() const { return w_x.cols(); }
  Index hidden_dim() const { return w_x.rows(); }

  /// Number of trainable scalars; the gain is fixed and not counted.
  Index parameter_count() const { return 2 * (w_x.size() + b_x.size() + c_x.size()); }

  const Matrix& weights(View v) const { return v == View::x ? w_x : w_y; }
  const Vector& encoder_bias(View v) const { return v == View::x ? b_x : b_y; }
  const Vector& decoder_bias(View v) const { return v == View::x ? c_x : c_y; }

  void validate() const {
    const Index h = w_x.rows();
    const Index d = w_x.cols();
    if (w_y.rows() != h || w_y.cols() != d) {
      throw DimensionError(detail::concat("W_x is ", detail::shape(w_x), " but W_y is ",
                                          detail::shape(w_y)));
    }
    if (b_x.size() != h || b_y.size() != h) {
      throw DimensionError("encoder bias length does not match hidden width");
    }
    if (c_x.size() != d || c_y.size() != d) {
      throw DimensionError("decoder bias length does not match input width");
    }
    if (!(gain > 0.0) || !std::isfinite(gain)) throw std::invalid_argument("gain must be > 0");
    if (!w_x.allFinite() || !w_y.allFinite() || !b_x.allFinite() || !b_y.allFinite() ||
        !c_x.allFinite() || !c_y.allFinite()) {
      throw DivergedError("layer parameters contain non-finite entries");
    }
  }

  bool operator==(const LayerParams&) const = default;
};

/// s(z) = tanh(gain * z), element-wise.
inline Matrix activate(const Matrix& z, double gain) { return (gain * z.array()).tanh().matrix(); }

/// ds/dz expressed through the activation value s: gain * (1 - s^2).
inline Matrix activate_derivative_from_output(const Matrix& s, double gain) {
  return (gain * (1.0 - s.array().square())).matrix();
}

inline Matrix encode(const LayerParams& p, const Matrix& input, View v) {
  if (input.cols() != p.input_dim()) {
    throw DimensionError(detail::concat("encode: input has ", input.cols(),
                                        " columns, layer expects ", p.input_dim()));
  }
  Matrix z = input * p.weights(v).transpose();
  z.rowwise() += p.encoder_bias(v).transpose();
  return activate(z, p.gain);
}

inline Matrix decode(const LayerParams& p, const Matrix& hidden, View v) {
  if (hidden.cols() != p.hidden_dim()) {
    throw DimensionError(detail::concat("decode: input has ", hidden.cols(),
                                        " columns, layer expects ", p.hidden_dim()));
  }
  Matrix z = hidden * p.weights(v);
  z.rowwise() += p.decoder_bias(v).transpose();
  return activate(z, p.gain);
}

/// Glorot-style uniform weights in [-r, r], r = sqrt(6 / (d_in + h)); zero biases.
/// Both views start from the same weight draw so their codes begin aligned.
inline LayerParams init_params(Index d_in, Index h, double gain, std::uint64_t seed) {
  if (d_in < 1 || h < 1) throw std::invalid_argument("init_params: widths must be >= 1");
  const double r = std::sqrt(6.0 / static_cast<double>(d_in + h));
  std::mt19937_64 rng(detail::mix_seed(seed, 0x1A7E));
  std::uniform_real_distribution<double> u(-r, r);
  auto draw = [&] {
    Matrix w(h, d_in);
    for (Index i = 0; i < h; ++i) {
      for (Index j = 0; j < d_in; ++j) w(i, j) = u(rng);
    }
    return w;
  };
  LayerParams p;
  p.w_x = draw();
  p.w_y = p.w_x;
  p.b_x = Vector::Zero(h);
  p.b_y = Vector::Zero(h);
  p.c_x = Vector::Zero(d_in);
  p.c_y = Vector::Zero(d_in);
  p.gain = gain;
  p.validate();
  return p;
}

// Flat parameter vectors follow the serialization order
// W_x (row-major), b_x, c_x, W_y (row-major), b_y, c_y.

inline Vector flatten(const LayerParams& p) {
  Vector out(p.parameter_count());
  Index k = 0;
  auto put_matrix = [&](const Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) out(k++) = m(i, j);
    }
  };
  auto put_vector = [&](const Vector& v) {
    out.segment(k, v.size()) = v;
    k += v.size();
  };
  put_matrix(p.w_x);
  put_vector(p.b_x);
  put_vector(p.c_x);
  put_matrix(p.w_y);
  put_vector(p.b_y);
  put_vector(p.c_y);
  return out;
}

/// Inverse of flatten; shapes and gain come from the template.
inline LayerParams unflatten(const Vector& flat, const LayerParams& shape_like) {
  if (flat.size() != shape_like.parameter_count()) {
    throw DimensionError(detail::concat("unflatten: got ", flat.size(), " values, expected ",
                                        shape_like.parameter_count()));
  }
  LayerParams p = shape_like;
  Index k = 0;
  auto take_matrix = [&](Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) m(i, j) = flat(k++);
    }
  };
  auto take_vector = [&](Vector& v) {
    v = flat.segment(k, v.size());
    k += v.size();
  };
  take_matrix(p.w_x);
  take_vector(p.b_x);
  take_vector(p.c_x);
  take_matrix(p.w_y);
  take_vector(p.b_y);
  take_vector(p.c_y);
  return p;
}

// ---------------------------------------------------------------------------
// Text serialization

namespace detail {

inline void write_matrix_block(std::ostream& out, const char* name, const Matrix& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

inline void expect_token(std::istream& in, const std::string& want) {
  std::string got;
  if (!(in >> got) || got != want) {
    throw DataError(concat("model file: expected '", want, "', found '", got, "'"));
  }
}

inline double read_double(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw DataError("model file: unexpected end of input");
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    throw DataError(concat("model file: bad number '", tok, "'"));
  }
  return v;
}

inline Index read_index(std::istream& in) {
  long long v = -1;
  if (!(in >> v) || v < 0) throw DataError("model file: bad dimension");
  return static_cast<Index>(v);
}

inline Matrix read_matrix_block(std::istream& in, const std::string& name) {
  expect_token(in, name);
  const Index rows = read_index(in);
  const Index cols = read_index(in);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = read_double(in);
  }
  return m;
}

inline Vector read_vector_block(std::istream& in, const std::string& name) {
  Matrix m = read_matrix_block(in, name);
  if (m.rows() != 1) throw DataError(concat("model file: '", name, "' must be a single row"));
  return m.transpose();
}

}  // namespace detail

/// Layer section: dimensions header, then gain, W_x, b_x, c_x, W_y, b_y, c_y.
inline void write_layer(std::ostream& out, const LayerParams& p) {
  out << "layer " << p.hidden_dim() << ' ' << p.input_dim() << '\n';
  out << "gain " << detail::format_double(p.gain) << '\n';
  detail::write_matrix_block(out, "W_x", p.w_x);
  detail::write_matrix_block(out, "b_x", p.b_x.transpose());
  detail::write_matrix_block(out, "c_x", p.c_x.transpose());
  detail::write_matrix_block(out, "W_y", p.w_y);
  detail::write_matrix_block(out, "b_y", p.b_y.transpose());
  detail::write_matrix_block(out, "c_y", p.c_y.transpose());
}

inline LayerParams read_layer(std::istream& in) {
  detail::expect_token(in, "layer");
  const Index h = detail::read_index(in);
  const Index d = detail::read_index(in);
  LayerParams p;
  detail::expect_token(in, "gain");
  p.gain = detail::read_double(in);
  p.w_x = detail::read_matrix_block(in, "W_x");
  p.b_x = detail::read_vector_block(in, "b_x");
  p.c_x = detail::read_vector_block(in, "c_x");
  p.w_y = detail::read_matrix_block(in, "W_y");
  p.b_y = detail::read_vector_block(in, "b_y");
  p.c_y = detail::read_vector_block(in, "c_y");
  if (p.w_x.rows() != h || p.w_x.cols() != d) {
    throw DataError(detail::concat("model file: layer header says ", h, "x", d, " but W_x is ",
                                   detail::shape(p.w_x)));
  }
  try {
    p.validate();
  } catch (const Error& e) {
    throw DataError(detail::concat("model file: ", e.what()));
  } catch (const std::invalid_argument& e) {
    throw DataError(detail::concat("model file: ", e.what()));
  }
  return p;
}

}  // namespace dcan

#endif  // DCAN_COUPLED_LAYER_HPP
