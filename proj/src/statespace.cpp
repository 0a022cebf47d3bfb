#include "pjmp/statespace.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>

#include "pjmp/error.hpp"

namespace pjmp {

const std::vector<std::size_t>& RecurrentClasses::only() const {
  if (closed.size() != 1) {
    throw Error(ErrorCode::MultipleClosedClasses,
                "jump graph has " + std::to_string(closed.size()) + " closed classes; select one");
  }
  return closed.front();
}

std::optional<std::size_t> StateSpace::index_of(const State& x) const {
  auto it = index_.find(x);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

StateSpace enumerate_reachable(const NeuronModel& model, const State& x0, std::size_t max_states) {
  const std::size_t n = model.size();
  if (x0.size() != n) throw Error(ErrorCode::InvalidState, "initial state has wrong length");

  StateSpace space;
  space.n_neurons_ = n;
  space.states_.push_back(x0);
  space.index_.emplace(x0, 0);

  for (std::size_t head = 0; head < space.states_.size(); ++head) {
    const State u = space.states_[head];
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      State v = apply_jump(model, u, i);
      auto [it, inserted] = space.index_.try_emplace(v, space.states_.size());
      if (inserted) {
        if (space.states_.size() >= max_states) {
          throw Error(ErrorCode::StateSpaceTooLarge,
                      "more than " + std::to_string(max_states) + " reachable states; coarsen the weight grid");
        }
        space.states_.push_back(std::move(v));
      }
      space.targets_.push_back(static_cast<std::uint32_t>(it->second));
      const double r = model.phi(model.potential(u, i));
      space.rates_.push_back(r);
      total += r;
    }
    space.total_rates_.push_back(total);
  }
  space.recurrent_ = recurrent_class(space.targets_, n);
  return space;
}

RecurrentClasses recurrent_class(std::span<const std::uint32_t> targets, std::size_t n_neurons) {
  const std::size_t n = n_neurons == 0 ? 0 : targets.size() / n_neurons;
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();

  // Iterative Tarjan.
  std::vector<std::size_t> index(n, kUnset), low(n, 0), comp(n, kUnset);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, std::size_t>> call;  // (node, next edge)
  std::size_t counter = 0, n_comp = 0;

  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    call.emplace_back(root, 0);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& [v, e] = call.back();
      if (e < n_neurons) {
        const std::size_t w = targets[v * n_neurons + e];
        ++e;
        if (index[w] == kUnset) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = n_comp;
        } while (w != v);
        ++n_comp;
      }
      const std::size_t done = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
    }
  }

  std::vector<bool> leaves(n_comp, false);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t i = 0; i < n_neurons; ++i) {
      if (comp[targets[u * n_neurons + i]] != comp[u]) leaves[comp[u]] = true;
    }
  }

  RecurrentClasses out;
  out.mask.assign(n, false);
  std::map<std::size_t, std::size_t> slot;  // component -> position in `closed`
  for (std::size_t u = 0; u < n; ++u) {
    if (leaves[comp[u]]) continue;
    out.mask[u] = true;
    auto [it, fresh] = slot.try_emplace(comp[u], out.closed.size());
    if (fresh) out.closed.emplace_back();
    out.closed[it->second].push_back(u);
  }
  return out;
}

RecurrentClasses recurrent_class(const StateSpace& space) {
  std::vector<std::uint32_t> targets(space.size() * space.n_neurons());
  for (std::size_t u = 0; u < space.size(); ++u) {
    for (std::size_t i = 0; i < space.n_neurons(); ++i) {
      targets[u * space.n_neurons() + i] = static_cast<std::uint32_t>(space.target(u, i));
    }
  }
  return recurrent_class(targets, space.n_neurons());
}

std::vector<std::size_t> jump_distances(const StateSpace& space, std::size_t source) {
  std::vector<std::size_t> dist(space.size(), std::numeric_limits<std::size_t>::max());
  std::deque<std::size_t> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    for (std::size_t i = 0; i < space.n_neurons(); ++i) {
      const std::size_t v = space.target(u, i);
      if (dist[v] == std::numeric_limits<std::size_t>::max()) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

double RateMatrix::at(std::size_t u, std::size_t v) const {
  if (u == v) return diagonal[u];
  for (std::size_t k = row_ptr[u]; k < row_ptr[u + 1]; ++k) {
    if (cols[k] == v) return values[k];
  }
  return 0.0;
}

double RateMatrix::max_exit_rate() const {
  double m = 0.0;
  for (double d : diagonal) m = std::max(m, -d);
  return m;
}

RateMatrix build_rate_matrix(const StateSpace& space) {
  RateMatrix q;
  q.n = space.size();
  q.row_ptr.reserve(q.n + 1);
  q.row_ptr.push_back(0);
  q.diagonal.assign(q.n, 0.0);
  std::vector<std::pair<std::uint32_t, double>> row;
  for (std::size_t u = 0; u < q.n; ++u) {
    row.clear();
    for (std::size_t i = 0; i < space.n_neurons(); ++i) {
      const std::size_t v = space.target(u, i);
      if (v == u) continue;
      row.emplace_back(static_cast<std::uint32_t>(v), space.rate(u, i));
    }
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    double exit = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (!q.cols.empty() && q.cols.size() > q.row_ptr.back() && q.cols.back() == row[k].first) {
        q.values.back() += row[k].second;  // several neurons lead to the same state
      } else {
        q.cols.push_back(row[k].first);
        q.values.push_back(row[k].second);
      }
      exit += row[k].second;
    }
    q.diagonal[u] = -exit;
    q.row_ptr.push_back(q.cols.size());
  }
  return q;
}

}  // namespace pjmp
