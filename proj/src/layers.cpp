#include "motion/grad/layers.hpp"

#include <stdexcept>

namespace motion::grad {

void Linear::register_params(ParameterStore& store) const {
  store.ensure(prefix_ + ".w", {in_, out_}, Init::Glorot);
  store.ensure(prefix_ + ".b", {out_}, Init::Zero);
}

Var Linear::forward(Tape& tape, ParameterStore& store, Var x) const {
  return tape.bias_add(tape.matmul(x, tape.param(store, prefix_ + ".w")),
                       tape.param(store, prefix_ + ".b"));
}

CellType cell_from_name(const std::string& name) {
  if (name == "lstm") return CellType::Lstm;
  if (name == "gru") return CellType::Gru;
  throw std::invalid_argument("unknown cell type '" + name + "' (expected lstm or gru)");
}

const char* cell_name(CellType type) {
  return type == CellType::Lstm ? "lstm" : "gru";
}

void RecurrentCell::register_params(ParameterStore& store) const {
  if (type_ == CellType::Lstm) {
    store.ensure(prefix_ + ".w", {input_ + units_, 4 * units_}, Init::Glorot);
    store.ensure(prefix_ + ".b", {4 * units_}, Init::Zero);
  } else {
    store.ensure(prefix_ + ".wzr", {input_ + units_, 2 * units_}, Init::Glorot);
    store.ensure(prefix_ + ".bzr", {2 * units_}, Init::Zero);
    store.ensure(prefix_ + ".wn", {input_ + units_, units_}, Init::Glorot);
    store.ensure(prefix_ + ".bn", {units_}, Init::Zero);
  }
}

CellState RecurrentCell::initial_state(Tape& tape, std::size_t batch) const {
  CellState s;
  s.h = tape.leaf(Tensor({batch, units_}));
  if (type_ == CellType::Lstm) s.c = tape.leaf(Tensor({batch, units_}));
  return s;
}

CellState RecurrentCell::step(Tape& tape, ParameterStore& store, Var x,
                              const CellState& state) const {
  const std::size_t u = units_;
  if (type_ == CellType::Lstm) {
    Var z = tape.bias_add(
        tape.matmul(tape.concat({x, state.h}), tape.param(store, prefix_ + ".w")),
        tape.param(store, prefix_ + ".b"));
    Var i = tape.sigmoid(tape.slice(z, 0, u));
    Var f = tape.sigmoid(tape.slice(z, u, u));
    Var g = tape.tanh(tape.slice(z, 2 * u, u));
    Var o = tape.sigmoid(tape.slice(z, 3 * u, u));
    Var c_next = tape.add(tape.mul(f, state.c), tape.mul(i, g));
    Var h_next = tape.mul(o, tape.tanh(c_next));
    return {h_next, c_next};
  }

  Var zr = tape.sigmoid(tape.bias_add(
      tape.matmul(tape.concat({x, state.h}), tape.param(store, prefix_ + ".wzr")),
      tape.param(store, prefix_ + ".bzr")));
  Var z = tape.slice(zr, 0, u);
  Var r = tape.slice(zr, u, u);
  Var n = tape.tanh(tape.bias_add(
      tape.matmul(tape.concat({x, tape.mul(r, state.h)}), tape.param(store, prefix_ + ".wn")),
      tape.param(store, prefix_ + ".bn")));
  Var h_next = tape.add(tape.mul(z, state.h), tape.mul(tape.one_minus(z), n));
  return {h_next, Var{}};
}

}  // namespace motion::grad
