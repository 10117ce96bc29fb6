#pragma once

#include "setinf/numerics.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace setinf {

class Model;

// Bit m of the mask is set iff outcome m belongs to the event.
using EventMask = std::uint32_t;

class OutcomeSpace {
 public:
  OutcomeSpace() = default;
  explicit OutcomeSpace(std::vector<std::string> labels);

  int size() const { return static_cast<int>(labels_.size()); }
  const std::string& label(int m) const { return labels_.at(m); }
  const std::vector<std::string>& labels() const { return labels_; }
  // Throws ConfigError for unknown labels.
  int index_of(const std::string& label) const;
  EventMask full() const { return (EventMask{1} << size()) - 1; }

 private:
  std::vector<std::string> labels_;
};

constexpr int kMaxOutcomes = 16;

int event_size(EventMask a);
EventMask complement(EventMask a, int m_outcomes);
Vec representer(EventMask a, int m_outcomes);

// All nonempty events with at most ceil(M/2) outcomes, ordered by cardinality
// and then by mask value.
std::vector<EventMask> enumerate_events(const OutcomeSpace& space);

struct ConstraintSet {
  int m_outcomes = 0;
  std::vector<EventMask> events;
  std::vector<double> lower;
  std::vector<char> equality;
  Vec theta;
  Vec x;
  // d_theta x events; filled only when requested from build_constraints.
  Mat grad;

  std::size_t size() const { return events.size(); }
  bool has_grad() const { return grad.cols() == static_cast<Eigen::Index>(events.size()) && !events.empty(); }
};

// Evaluates the containment functional on every enumerated event. An event
// is flagged as an equality when nu(A) + nu(A^c) = 1 within 1e-10.
ConstraintSet build_constraints(const Model& model, const Vec& theta, const Vec& x,
                                bool with_grad = false);

// Drops constraints implied by the others (together with the simplex).
// Candidates are visited from the largest event down so that singletons
// survive whenever a union of them carries the same information.
ConstraintSet prune_redundant(const ConstraintSet& cs);

// Largest violation of the constraint set (and the simplex) at q; a value
// <= 0 means feasible.
double max_violation(const ConstraintSet& cs, const Vec& q);

nlohmann::json to_json(const ConstraintSet& cs, const OutcomeSpace& space);

// Minimizes c'q over {q >= 0 : G q >= h}. Requires c >= 0. Returns false if
// the feasible set is empty.
bool lp_min(const Vec& c, const Mat& g, const Vec& h, double* value);

}  // namespace setinf
