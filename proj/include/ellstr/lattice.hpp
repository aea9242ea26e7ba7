#pragma once
#include <string>
#include <vector>

#include "ellstr/elliptic.hpp"
#include "ellstr/errors.hpp"
#include "ellstr/numeric.hpp"
#include "ellstr/weights.hpp"

namespace ellstr {

enum class edge_type { first, second };

struct lattice_site {
    int id = 0;
    bool boundary = false;
    double spin = 0.0; // fixed value when boundary, ignored otherwise
};

struct lattice_edge {
    int from = 0;
    int to = 0;
    edge_type type = edge_type::first;
    double p_rap = 0.0;
    double q_rap = 0.0;
};

struct lattice_graph {
    std::vector<lattice_site> sites;
    std::vector<lattice_edge> edges;

    const lattice_site& site(int id) const;
    int internal_count() const;

    // Structural checks: ids consistent, connected, within the planar
    // edge bound, every internal site touched by an edge.
    void validate() const;

    static lattice_graph from_json(const std::string& text);
    std::string to_json() const;
};

// rows x cols grid; the outer ring is boundary (spin 0), horizontal edges
// are first type and vertical edges second type, all on the same rapidity
// pair, so every internal site satisfies the sum rule identically.
lattice_graph build_square_lattice(int rows, int cols, double p_rap,
                                   double q_rap);

struct spectral_assignment {
    std::vector<cx> alpha; // parallel to graph edges
    cx eta;
};

// p-q on first-type edges, eta-p+q on second-type ones. With physical set,
// every alpha must land in (0, Re eta).
spectral_assignment assign_alphas(const lattice_graph& g,
                                  const elliptic_params& params,
                                  bool physical = true);

// |sum of incident alphas - 2 Re eta| for each internal site, keyed by id.
std::vector<std::pair<int, double>> check_sum_rule(
    const lattice_graph& g, const spectral_assignment& assignment);

// Nested trapezoid over the internal spins of the edge-weight product
// times one S factor per internal site; certified by point-doubling.
cx partition_function(const lattice_graph& g, const elliptic_params& params,
                      const quadrature_control& qctl = {});

// Replace a degree-3 internal site whose edges carry the star pattern by
// the matching triangle on its neighbours; partition functions agree.
lattice_graph star_triangle_move(const lattice_graph& g, int center_id);

} // namespace ellstr
