// Copyright 2026 The GRIP Engine Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "grip/seq2seq.hpp"

#include "grip/error.hpp"
#include "grip/rng.hpp"

#include <cmath>

namespace grip
{
std::string_view to_string(CellType cell) noexcept { return cell == CellType::gru ? "gru" : "lstm"; }

std::optional<CellType> parse_cell_type(std::string_view text)
{
  if (text == "gru" || text == "GRU") return CellType::gru;
  if (text == "lstm" || text == "LSTM") return CellType::lstm;
  return std::nullopt;
}

std::size_t gate_count(CellType cell) noexcept { return cell == CellType::gru ? 3 : 4; }

void validate(const Seq2SeqConfig & config)
{
  if (config.num_layers < 1) throw ParameterError("seq2seq: num_layers must be >= 1");
  if (config.r < 1) throw ParameterError("seq2seq: r must be >= 1");
  if (config.output_dim < 1) throw ParameterError("seq2seq: output_dim must be >= 1");
}

namespace
{
Tensor uniform_tensor(Shape shape, double bound, Rng & rng)
{
  Tensor t(std::move(shape), true);
  for (auto & v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

RecurrentParams init_recurrent(CellType cell, std::size_t input, std::size_t hidden, std::size_t layers, Rng & rng)
{
  RecurrentParams p;
  p.cell = cell;
  p.input_size = input;
  p.hidden_size = hidden;
  const std::size_t g = gate_count(cell) * hidden;
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (std::size_t l = 0; l < layers; ++l) {
    RecurrentLayer layer;
    layer.w_ih = uniform_tensor({g, l == 0 ? input : hidden}, bound, rng);
    layer.w_hh = uniform_tensor({g, hidden}, bound, rng);
    layer.b_ih = uniform_tensor({g}, bound, rng);
    layer.b_hh = uniform_tensor({g}, bound, rng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

Tensor one_minus_mix(Tape & tape, const Tensor & z, const Tensor & candidate, const Tensor & h)
{
  // (1 - z) * n + z * h  ==  n + z * (h - n)
  return tape.add(candidate, tape.mul(z, tape.sub(h, candidate)));
}
}  // namespace

Seq2SeqParams init_seq2seq(const Seq2SeqConfig & config, std::size_t input_size, Rng & rng)
{
  validate(config);
  const std::size_t hidden = config.hidden_size();
  Seq2SeqParams p;
  p.encoder = init_recurrent(config.cell, input_size, hidden, config.num_layers, rng);
  p.decoder = init_recurrent(config.cell, config.output_dim, hidden, config.num_layers, rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  p.out_w = uniform_tensor({config.output_dim, hidden}, bound, rng);
  p.out_b = uniform_tensor({config.output_dim}, bound, rng);
  return p;
}

RecurrentState zero_state(const RecurrentParams & params, std::size_t rows)
{
  RecurrentState s;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    s.h.push_back(Tensor::zeros({rows, params.hidden_size}));
    if (params.cell == CellType::lstm) s.c.push_back(Tensor::zeros({rows, params.hidden_size}));
  }
  return s;
}

RecurrentState recurrent_step(Tape & tape, const RecurrentParams & params, const Tensor & x, const RecurrentState & state)
{
  const std::size_t hsz = params.hidden_size;
  if (state.h.size() != params.layers.size()) {
    throw DimensionError("recurrent_step: state has " + std::to_string(state.h.size()) + " layers, params have " +
                         std::to_string(params.layers.size()));
  }
  RecurrentState next;
  Tensor input = x;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto & layer = params.layers[l];
    const Tensor & h = state.h[l];
    Tensor gi = tape.linear(input, layer.w_ih, layer.b_ih);
    Tensor gh = tape.linear(h, layer.w_hh, layer.b_hh);
    if (params.cell == CellType::gru) {
      Tensor r = tape.sigmoid(tape.add(tape.slice_cols(gi, 0, hsz), tape.slice_cols(gh, 0, hsz)));
      Tensor z = tape.sigmoid(tape.add(tape.slice_cols(gi, hsz, hsz), tape.slice_cols(gh, hsz, hsz)));
      Tensor n = tape.tanh(tape.add(tape.slice_cols(gi, 2 * hsz, hsz), tape.mul(r, tape.slice_cols(gh, 2 * hsz, hsz))));
      next.h.push_back(one_minus_mix(tape, z, n, h));
    } else {
      Tensor gates = tape.add(gi, gh);
      Tensor i = tape.sigmoid(tape.slice_cols(gates, 0, hsz));
      Tensor f = tape.sigmoid(tape.slice_cols(gates, hsz, hsz));
      Tensor g = tape.tanh(tape.slice_cols(gates, 2 * hsz, hsz));
      Tensor o = tape.sigmoid(tape.slice_cols(gates, 3 * hsz, hsz));
      Tensor c = tape.add(tape.mul(f, state.c.at(l)), tape.mul(i, g));
      next.h.push_back(tape.mul(o, tape.tanh(c)));
      next.c.push_back(c);
    }
    input = next.h.back();
  }
  return next;
}

RecurrentState encode(Tape & tape, const Tensor & feature, const Seq2SeqParams & params)
{
  if (feature.rank() != 3 || feature.dim(2) != params.encoder.input_size) {
    throw DimensionError(
      "encode: feature " + shape_to_string(feature.shape()) + " does not match encoder input width " +
      std::to_string(params.encoder.input_size));
  }
  RecurrentState state = zero_state(params.encoder, feature.dim(0));
  for (std::size_t t = 0; t < feature.dim(1); ++t) {
    state = recurrent_step(tape, params.encoder, tape.time_slice(feature, t), state);
  }
  return state;
}

Tensor decode(
  Tape & tape, const RecurrentState & encoded, const Tensor & first_input, std::size_t steps,
  const Seq2SeqParams & params, bool residual)
{
  if (steps < 1) throw ParameterError("decode: need at least one future step");
  if (first_input.rank() != 2 || first_input.dim(1) != params.decoder.input_size) {
    throw DimensionError(
      "decode: first input " + shape_to_string(first_input.shape()) + " does not match decoder input width " +
      std::to_string(params.decoder.input_size));
  }
  RecurrentState state = encoded;
  Tensor input = first_input;
  std::vector<Tensor> outputs;
  outputs.reserve(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    state = recurrent_step(tape, params.decoder, input, state);
    Tensor out = tape.linear(state.h.back(), params.out_w, params.out_b);
    if (residual) out = tape.add(out, input);
    outputs.push_back(out);
    input = out;
  }
  return tape.stack_time(outputs);
}
}  // namespace grip
