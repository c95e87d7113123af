#pragma once

// Catalog of generalized-continuum models in evolutionary form and the
// reduction edges between them.
//
// Every model is a per-node material law (M0, M1, M2) on a labelled layout
// plus gradient couplings; build() lifts both to a grid. Parameters are
// scalars with defaults (all defaults are admissible); any coefficient block
// may instead be given explicitly as an override matrix.

#include "evoel/discretization.hpp"
#include "evoel/evolution.hpp"
#include "evoel/material_laws.hpp"
#include "evoel/reduction.hpp"

#include <map>
#include <string>
#include <vector>

namespace evoel {

struct ModelSpec {
  std::string name;
  std::map<std::string, double> params;
  std::map<std::string, Matrix> overrides;
  Grid grid{8, 1.0 / 9.0};
};

struct ParamInfo {
  std::string name;
  double default_value;
};

struct OverrideInfo {
  std::string name;
  Index rows, cols;
};

struct ModelInfo {
  std::string name;
  std::string summary;
  StateLayout layout;
  std::vector<GradientCoupling> couplings;
  std::vector<ParamInfo> params;
  std::vector<OverrideInfo> overrides;
};

const std::vector<ModelInfo>& zoo_catalog();
const ModelInfo& model_info(const std::string& name);

/// Violated admissibility conditions, each naming the inequality
/// (e.g. "alpha1 must be positive"). Empty iff the parameters are admissible.
/// Throws std::invalid_argument on unknown models, parameters or override
/// names and ShapeError on override shape mismatches.
std::vector<std::string> check_parameters(const ModelSpec& spec);

struct Model {
  ModelSpec spec;
  MaterialLaw law;  // per node
  std::vector<GradientCoupling> couplings;
  EvoProblem problem;  // lifted to spec.grid; no forcing
};

/// Per-node law only.
MaterialLaw build_law(const ModelSpec& spec);
/// With `enforce`, inadmissible parameters raise PreconditionError listing
/// the violations; otherwise the model is built and its law's validity
/// records the failure.
Model build(const ModelSpec& spec, bool enforce = true);

struct ZooEdge {
  std::string from, to;
  ReductionMap::Kind kind;
};

const std::vector<ZooEdge>& zoo_edges();
/// Throws std::invalid_argument for an edge outside the catalog.
ReductionMap reduction_edge(const std::string& from, const std::string& to);
/// Spec of the directly built child whose coefficients are the closed-form
/// images of `from`'s coefficients under the edge.
ModelSpec edge_target(const ModelSpec& from, const std::string& to);

/// Micromorphic: the original stresses (tau, sigma) from the state
/// coordinates Sigma = iota_sym tau + sigma (9) and s = iota_sym^T sigma (6).
std::pair<Vector, Vector> micromorphic_original_stresses(const Vector& big_sigma, const Vector& s);

/// Catalog metadata (models, parameter schemas, edges) as JSON.
std::string zoo_json();

}  // namespace evoel
