// SPDX-License-Identifier: Apache-2.0

#include "r2s2/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace r2s2 {

void ModelConfig::validate() const {
  if (n_in < 1 || n_out < 1) throw ConfigError("model: channel counts must be positive");
  if (base_width < 1) throw ConfigError("model: base_width must be positive");
  if (depth < 1) throw ConfigError("model: depth must be >= 1");
  if (leaky_slope < 0.0 || leaky_slope >= 1.0) throw ConfigError("model: leaky_slope in [0,1)");
}

int ModelConfig::stage_width(int level) const {
  return base_width << std::min(level, 2);
}

Tensor position_embedding_planes(int64_t h, int64_t w) {
  Tensor t({4, h, w});
  for (int64_t y = 0; y < h; ++y) {
    double ay = 2.0 * M_PI * static_cast<double>(y) / static_cast<double>(h);
    for (int64_t x = 0; x < w; ++x) {
      double ax = 2.0 * M_PI * static_cast<double>(x) / static_cast<double>(w);
      t.at(0, y, x) = std::sin(ay);
      t.at(1, y, x) = std::cos(ay);
      t.at(2, y, x) = std::sin(ax);
      t.at(3, y, x) = std::cos(ax);
    }
  }
  return t;
}

namespace {

Tensor init_uniform(const std::vector<int64_t>& shape, int64_t fan_in, Rng& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return Tensor::random_uniform(shape, -bound, bound, rng);
}

}  // namespace

Model::Model(ModelConfig cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);

  auto conv_block = [&](const std::string& name, int cin, int cout) {
    params_.push_back({name + ".w", init_uniform({cout, cin, 3, 3}, 9 * cin, rng)});
    params_.push_back({name + ".b", init_uniform({cout}, 9 * cin, rng)});
    Tensor gamma({cout});
    gamma.fill(1.0);
    params_.push_back({name + ".g", std::move(gamma)});
    params_.push_back({name + ".beta", Tensor({cout})});
  };
  auto tconv_block = [&](const std::string& name, int cin, int cout) {
    params_.push_back({name + ".w", init_uniform({cin, cout, 3, 3}, 9 * cout, rng)});
    params_.push_back({name + ".b", init_uniform({cout}, 9 * cout, rng)});
    Tensor gamma({cout});
    gamma.fill(1.0);
    params_.push_back({name + ".g", std::move(gamma)});
    params_.push_back({name + ".beta", Tensor({cout})});
  };

  conv_block("stem", cfg_.input_planes(), cfg_.stage_width(0));
  for (int s = 1; s <= cfg_.depth; ++s)
    conv_block("enc" + std::to_string(s), cfg_.stage_width(s - 1), cfg_.stage_width(s));

  if (cfg_.attention) {
    int c = cfg_.stage_width(cfg_.depth);
    for (const char* nm : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"}) {
      params_.push_back({nm, init_uniform({c, c}, c, rng)});
      params_.push_back({std::string(nm) + "_b", init_uniform({c}, c, rng)});
    }
  }

  for (int s = cfg_.depth; s >= 1; --s) {
    tconv_block("up" + std::to_string(s), cfg_.stage_width(s), cfg_.stage_width(s - 1));
    conv_block("dec" + std::to_string(s), 2 * cfg_.stage_width(s - 1), cfg_.stage_width(s - 1));
  }
  params_.push_back({"head.w", init_uniform({2 * cfg_.n_out, cfg_.stage_width(0), 3, 3},
                                            9 * cfg_.stage_width(0), rng)});
  params_.push_back({"head.b", init_uniform({2 * cfg_.n_out}, 9 * cfg_.stage_width(0), rng)});
}

int64_t Model::param_count() const {
  int64_t n = 0;
  for (const auto& p : params_) n += p.value.numel();
  return n;
}

int64_t Model::analytic_param_count(const ModelConfig& cfg) {
  auto conv = [](int64_t cin, int64_t cout) { return 9 * cin * cout + cout + 2 * cout; };
  int64_t n = conv(cfg.input_planes(), cfg.stage_width(0));
  for (int s = 1; s <= cfg.depth; ++s) n += conv(cfg.stage_width(s - 1), cfg.stage_width(s));
  if (cfg.attention) {
    int64_t c = cfg.stage_width(cfg.depth);
    n += 4 * (c * c + c);
  }
  for (int s = cfg.depth; s >= 1; --s) {
    n += conv(cfg.stage_width(s), cfg.stage_width(s - 1));          // up
    n += conv(2 * cfg.stage_width(s - 1), cfg.stage_width(s - 1));  // dec
  }
  n += 9 * cfg.stage_width(0) * (2 * cfg.n_out) + 2 * cfg.n_out;  // head
  return n;
}

const Tensor& Model::p(const std::string& name) const {
  for (const auto& prm : params_)
    if (prm.name == name) return prm.value;
  throw UsageError("unknown parameter '" + name + "'");
}

ad::Var Model::build(ad::Graph& g, ad::Var input, std::vector<ad::Var>* param_vars) const {
  std::vector<ad::Var> pvars;
  pvars.reserve(params_.size());
  for (const auto& prm : params_) pvars.push_back(g.leaf(prm.value));
  if (param_vars) *param_vars = pvars;
  return build_with(g, input, pvars);
}

ad::Var Model::build_with(ad::Graph& g, ad::Var input,
                          const std::vector<ad::Var>& pvars) const {
  const Tensor& in = g.value(input);
  if (in.rank() != 3 || in.dim(0) != 2 * cfg_.n_in)
    throw ShapeError("model: input must be (2*n_in, R, D)");
  if (pvars.size() != params_.size()) throw UsageError("model: parameter var count mismatch");
  const int64_t R = in.dim(1), D = in.dim(2);
  const int64_t div = int64_t{1} << cfg_.depth;
  if (R % div != 0 || D % div != 0)
    throw ConfigError("model: spatial dims must be divisible by 2^depth");

  auto pv = [&](const std::string& name) -> ad::Var {
    for (size_t i = 0; i < params_.size(); ++i)
      if (params_[i].name == name) return pvars[i];
    throw UsageError("unknown parameter '" + name + "'");
  };

  auto checked = [&](ad::Var v, const std::string& layer) {
    if (!g.value(v).all_finite())
      throw NumericError("non-finite activation after layer '" + layer + "'");
    return v;
  };

  auto conv_block = [&](ad::Var x, const std::string& name) {
    ad::Var y = ad::conv3x3(x, pv(name + ".w"), pv(name + ".b"));
    y = ad::instance_norm(y, pv(name + ".g"), pv(name + ".beta"));
    y = ad::leaky_relu(y, cfg_.leaky_slope);
    return checked(y, name);
  };
  auto up_block = [&](ad::Var x, const std::string& name) {
    ad::Var y = ad::tconv3x3_s2(x, pv(name + ".w"), pv(name + ".b"));
    y = ad::instance_norm(y, pv(name + ".g"), pv(name + ".beta"));
    y = ad::leaky_relu(y, cfg_.leaky_slope);
    return checked(y, name);
  };

  ad::Var x = input;
  if (cfg_.pos_embed) x = ad::concat_c(x, g.constant(position_embedding_planes(R, D)));

  x = conv_block(x, "stem");
  std::vector<ad::Var> skips = {x};
  for (int s = 1; s <= cfg_.depth; ++s) {
    x = ad::avg_pool2(x);
    x = conv_block(x, "enc" + std::to_string(s));
    if (s < cfg_.depth) skips.push_back(x);
  }

  if (cfg_.attention) {
    const int64_t C = g.value(x).dim(0), BH = g.value(x).dim(1), BW = g.value(x).dim(2);
    const int64_t S = BH * BW;
    ad::Var xf = ad::reshape(x, {C, S});
    ad::Var q = ad::add_bias_rows(ad::matmul(pv("attn.wq"), xf), pv("attn.wq_b"));
    ad::Var k = ad::add_bias_rows(ad::matmul(pv("attn.wk"), xf), pv("attn.wk_b"));
    ad::Var v = ad::add_bias_rows(ad::matmul(pv("attn.wv"), xf), pv("attn.wv_b"));
    ad::Var attn = ad::softmax_rows(ad::scale(ad::matmul_nt(q, k), 1.0 / std::sqrt(double(S))));
    ad::Var o = ad::add_bias_rows(ad::matmul(pv("attn.wo"), ad::matmul(attn, v)), pv("attn.wo_b"));
    x = ad::add(x, ad::reshape(o, {C, BH, BW}));
    x = checked(x, "attn");
  }

  for (int s = cfg_.depth; s >= 1; --s) {
    x = up_block(x, "up" + std::to_string(s));
    x = ad::concat_c(x, skips[static_cast<size_t>(s - 1)]);
    x = conv_block(x, "dec" + std::to_string(s));
  }

  x = ad::conv3x3(x, pv("head.w"), pv("head.b"));
  return checked(x, "head");
}

Tensor Model::forward(const Tensor& input) const {
  ad::Graph g;
  ad::Var in = g.leaf(input, false);
  ad::Var out = build(g, in);
  return g.value(out);
}

// ---------------------------------------------------------------------------
// checkpoint io: magic, version, config, then named little-endian f64 blocks
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'R', '2', 'C', 'P'};
constexpr uint16_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw FormatError("checkpoint truncated");
  return v;
}

}  // namespace

void Model::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write checkpoint '" + path + "'");
  os.write(kMagic, 4);
  put(os, kVersion);
  put(os, static_cast<int32_t>(cfg_.n_in));
  put(os, static_cast<int32_t>(cfg_.n_out));
  put(os, static_cast<int32_t>(cfg_.base_width));
  put(os, static_cast<int32_t>(cfg_.depth));
  put(os, cfg_.leaky_slope);
  put(os, static_cast<uint8_t>(cfg_.attention));
  put(os, static_cast<uint8_t>(cfg_.pos_embed));
  put(os, static_cast<uint32_t>(params_.size()));
  for (const auto& prm : params_) {
    put(os, static_cast<uint32_t>(prm.name.size()));
    os.write(prm.name.data(), static_cast<std::streamsize>(prm.name.size()));
    put(os, static_cast<uint8_t>(prm.value.rank()));
    for (int64_t d : prm.value.shape) put(os, d);
    os.write(reinterpret_cast<const char*>(prm.value.data()),
             static_cast<std::streamsize>(prm.value.numel() * 8));
  }
  if (!os) throw IoError("short write on checkpoint '" + path + "'");
}

Model Model::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("bad checkpoint magic in '" + path + "'");
  if (get<uint16_t>(is) != kVersion) throw FormatError("unsupported checkpoint version");

  Model m;
  m.cfg_.n_in = get<int32_t>(is);
  m.cfg_.n_out = get<int32_t>(is);
  m.cfg_.base_width = get<int32_t>(is);
  m.cfg_.depth = get<int32_t>(is);
  m.cfg_.leaky_slope = get<double>(is);
  m.cfg_.attention = get<uint8_t>(is) != 0;
  m.cfg_.pos_embed = get<uint8_t>(is) != 0;
  m.cfg_.validate();

  uint32_t n_params = get<uint32_t>(is);
  m.params_.reserve(n_params);
  for (uint32_t i = 0; i < n_params; ++i) {
    uint32_t len = get<uint32_t>(is);
    if (len > 4096) throw FormatError("implausible parameter name length");
    std::string name(len, '\0');
    is.read(name.data(), len);
    uint8_t rank = get<uint8_t>(is);
    std::vector<int64_t> shape;
    for (uint8_t d = 0; d < rank; ++d) shape.push_back(get<int64_t>(is));
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.numel() * 8));
    if (!is) throw FormatError("checkpoint truncated in block '" + name + "'");
    m.params_.push_back({std::move(name), std::move(t)});
  }
  return m;
}

}  // namespace r2s2
