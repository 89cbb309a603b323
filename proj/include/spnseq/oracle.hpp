#pragma once

// Exhaustive reference computations. They enumerate the full configuration
// space and share no code with the dynamic programs they check: the SPN
// reference sums over every joint assignment of the hidden variables, the
// chain references score every label sequence factor by factor.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spnseq/chain_crf.hpp"
#include "spnseq/memm.hpp"
#include "spnseq/spn.hpp"

namespace spnseq::oracle {

struct ExhaustiveBudget {
  std::uint64_t max_configurations = 10'000'000;
};

// Q(y, x) for every label, in the linear domain, by summing
// prod_k phi_k(y, h, x) over all H^(#hidden) hidden assignments.
// Sum-product only. Throws BudgetError above the budget.
std::vector<double> spn_brute_force(const spn::SpnTopology& topology,
                                    const spn::SpnWeights& weights, std::span<const double> x,
                                    ExhaustiveBudget budget = {});

// Posterior mass of all hidden assignments consistent with `prefix`.
double spn_brute_force_marginal(const spn::SpnTopology& topology, const spn::SpnWeights& weights,
                                std::span<const double> x, const spn::PathPrefix& prefix,
                                ExhaustiveBudget budget = {});

struct ChainEnumeration {
  double log_partition = 0.0;
  std::vector<double> scores;  // unnormalized log score per sequence, lexicographic order
  std::vector<int> argmax;     // lowest sequence in lexicographic order among the maxima
  double max_score = 0.0;
  // p(y_t = y), T x Y
  std::vector<double> label_marginals;
};

ChainEnumeration chain_brute_force(const crf::ChainModel& model, const Observations& observations,
                                   ExhaustiveBudget budget = {});

// Unnormalized chain log score of `labels`, from the factor definitions.
double chain_score(const crf::ChainModel& model, const Observations& observations,
                   std::span<const int> labels);

struct MemmEnumeration {
  std::vector<int> argmax;
  double max_log_prob = 0.0;
  double total_probability = 0.0;  // sum over all sequences, should be 1
};

MemmEnumeration memm_brute_force(const memm::MemmModel& model, const Observations& observations,
                                 ExhaustiveBudget budget = {});

// log p(y_t | g_t, x) recomputed from the definition, term by term.
double memm_log_prob(const memm::MemmModel& model, const Observations& observations,
                     std::span<const int> labels);

}  // namespace spnseq::oracle
