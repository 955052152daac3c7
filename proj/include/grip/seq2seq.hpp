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

#ifndef GRIP__SEQ2SEQ_HPP_
#define GRIP__SEQ2SEQ_HPP_

#include "grip/tensor.hpp"

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace grip
{
class Rng;

enum class CellType { gru, lstm };

std::string_view to_string(CellType cell) noexcept;
std::optional<CellType> parse_cell_type(std::string_view text);
std::size_t gate_count(CellType cell) noexcept;

/// One stacked layer; gate blocks are laid out along the rows in the order
/// (r, z, n) for GRU and (i, f, g, o) for LSTM.
struct RecurrentLayer
{
  Tensor w_ih;  // gates*H x input
  Tensor w_hh;  // gates*H x H
  Tensor b_ih;  // gates*H
  Tensor b_hh;  // gates*H
};

struct RecurrentParams
{
  CellType cell = CellType::gru;
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  std::vector<RecurrentLayer> layers;
};

/// Hidden (and, for LSTM, cell) state of every layer, each rows x H.
struct RecurrentState
{
  std::vector<Tensor> h;
  std::vector<Tensor> c;
};

struct Seq2SeqConfig
{
  CellType cell = CellType::gru;
  std::size_t num_layers = 2;
  /// Hidden width multiplier: each agent carries r * output_dim units.
  std::size_t r = 30;
  bool residual = true;
  std::size_t output_dim = 2;

  std::size_t hidden_size() const noexcept { return r * output_dim; }
};

void validate(const Seq2SeqConfig & config);

struct Seq2SeqParams
{
  RecurrentParams encoder;
  RecurrentParams decoder;
  Tensor out_w;  // output_dim x H
  Tensor out_b;  // output_dim
};

Seq2SeqParams init_seq2seq(const Seq2SeqConfig & config, std::size_t input_size, Rng & rng);

/// One step through every layer; returns the new state.
RecurrentState recurrent_step(Tape & tape, const RecurrentParams & params, const Tensor & x, const RecurrentState & state);

RecurrentState zero_state(const RecurrentParams & params, std::size_t rows);

/// Runs the encoder over feature[:, t, :] for t = 0 .. t_h-1 (one row per
/// agent, shared weights) and returns the final state of every layer.
RecurrentState encode(Tape & tape, const Tensor & feature, const Seq2SeqParams & params);

/// Rolls the decoder out for `steps` steps. Step 1 consumes `first_input`
/// (rows x output_dim); every later step consumes the previous output. With
/// `residual` the step input is added to the projected cell output.
/// Returns rows x steps x output_dim.
Tensor decode(
  Tape & tape, const RecurrentState & encoded, const Tensor & first_input, std::size_t steps,
  const Seq2SeqParams & params, bool residual);
}  // namespace grip

#endif  // GRIP__SEQ2SEQ_HPP_
