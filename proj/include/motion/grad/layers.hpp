#pragma once

#include <string>

#include "motion/grad/tape.hpp"

namespace motion::grad {

/// Fully connected layer y = x W + b with W named "<prefix>.w" ([in x out],
/// Glorot) and b "<prefix>.b" ([out], zero).
class Linear {
 public:
  Linear(std::size_t in, std::size_t out, std::string prefix)
      : in_(in), out_(out), prefix_(std::move(prefix)) {}

  void register_params(ParameterStore& store) const;
  Var forward(Tape& tape, ParameterStore& store, Var x) const;

  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }

 private:
  std::size_t in_, out_;
  std::string prefix_;
};

enum class CellType { Lstm, Gru };

CellType cell_from_name(const std::string& name);
const char* cell_name(CellType type);

struct CellState {
  Var h;
  Var c;  // unused for GRU
};

/// Single recurrent layer over [batch x input] steps.
///
/// LSTM: one fused kernel W ([input+units x 4*units]) and bias ([4*units]),
/// gate order i, f, g, o:
///   z = [x, h] W + b;  c' = sigmoid(z_f) . c + sigmoid(z_i) . tanh(z_g)
///   h' = sigmoid(z_o) . tanh(c')
/// GRU: update/reset fused ([input+units x 2*units]), candidate from the
/// reset-gated state:
///   [z, r] = sigmoid([x, h] Wzr + bzr)
///   n = tanh([x, r . h] Wn + bn);  h' = z . h + (1 - z) . n
class RecurrentCell {
 public:
  RecurrentCell(CellType type, std::size_t input, std::size_t units, std::string prefix)
      : type_(type), input_(input), units_(units), prefix_(std::move(prefix)) {}

  void register_params(ParameterStore& store) const;
  CellState initial_state(Tape& tape, std::size_t batch) const;
  CellState step(Tape& tape, ParameterStore& store, Var x, const CellState& state) const;

  CellType type() const { return type_; }
  std::size_t units() const { return units_; }
  std::size_t input() const { return input_; }

 private:
  CellType type_;
  std::size_t input_, units_;
  std::string prefix_;
};

}  // namespace motion::grad
