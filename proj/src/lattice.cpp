#include "ellstr/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

namespace ellstr {

namespace {

using nlohmann::json;

int index_of(const lattice_graph& g, int id) {
    for (size_t i = 0; i < g.sites.size(); ++i)
        if (g.sites[i].id == id) return static_cast<int>(i);
    throw bad_input("unknown site id " + std::to_string(id));
}

bool same_rap(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

} // namespace

const lattice_site& lattice_graph::site(int id) const {
    return sites[index_of(*this, id)];
}

int lattice_graph::internal_count() const {
    int m = 0;
    for (const auto& s : sites)
        if (!s.boundary) ++m;
    return m;
}

void lattice_graph::validate() const {
    if (sites.empty())
        throw bad_input("graph has no sites");
    std::set<int> ids;
    for (const auto& s : sites)
        if (!ids.insert(s.id).second)
            throw bad_input("duplicate site id " + std::to_string(s.id));

    std::map<int, std::vector<int>> adj;
    for (const auto& e : edges) {
        if (!ids.count(e.from) || !ids.count(e.to))
            throw bad_input("edge references a missing site");
        if (e.from == e.to)
            throw bad_input("self-loop on site " + std::to_string(e.from));
        adj[e.from].push_back(e.to);
        adj[e.to].push_back(e.from);
    }
    for (const auto& s : sites)
        if (!s.boundary && adj[s.id].empty())
            throw bad_input("internal site " + std::to_string(s.id) +
                            " has no edges");

    // Euler bound, the cheap necessary side of planarity.
    if (sites.size() >= 3 && edges.size() > 3 * sites.size() - 6)
        throw bad_input("edge count exceeds the planar bound");

    // Connectivity over the whole graph.
    std::set<int> seen;
    std::vector<int> stack{sites.front().id};
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (!seen.insert(v).second) continue;
        for (int w : adj[v]) stack.push_back(w);
    }
    if (seen.size() != sites.size())
        throw bad_input("graph is not connected");
}

lattice_graph lattice_graph::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw bad_input(std::string("graph JSON parse failed: ") + e.what());
    }
    lattice_graph g;
    try {
        for (const auto& js : j.at("sites")) {
            lattice_site s;
            s.id = js.at("id").get<int>();
            s.boundary = js.at("boundary").get<bool>();
            s.spin = js.value("spin", 0.0);
            g.sites.push_back(s);
        }
        for (const auto& je : j.at("edges")) {
            lattice_edge e;
            e.from = je.at("from").get<int>();
            e.to = je.at("to").get<int>();
            const std::string t = je.at("type").get<std::string>();
            if (t == "first")
                e.type = edge_type::first;
            else if (t == "second")
                e.type = edge_type::second;
            else
                throw bad_input("edge type must be 'first' or 'second'");
            e.p_rap = je.at("p").get<double>();
            e.q_rap = je.at("q").get<double>();
            g.edges.push_back(e);
        }
    } catch (const json::exception& e) {
        throw bad_input(std::string("graph JSON missing fields: ") + e.what());
    }
    g.validate();
    return g;
}

std::string lattice_graph::to_json() const {
    json j;
    j["sites"] = json::array();
    for (const auto& s : sites)
        j["sites"].push_back({{"id", s.id}, {"boundary", s.boundary}, {"spin", s.spin}});
    j["edges"] = json::array();
    for (const auto& e : edges)
        j["edges"].push_back({{"from", e.from},
                              {"to", e.to},
                              {"type", e.type == edge_type::first ? "first" : "second"},
                              {"p", e.p_rap},
                              {"q", e.q_rap}});
    return j.dump(2);
}

lattice_graph build_square_lattice(int rows, int cols, double p_rap,
                                   double q_rap) {
    if (rows < 2 || cols < 2)
        throw bad_input("square lattice needs at least 2x2 sites");
    lattice_graph g;
    auto id = [cols](int r, int c) { return r * cols + c; };
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            lattice_site s;
            s.id = id(r, c);
            s.boundary = r == 0 || r == rows - 1 || c == 0 || c == cols - 1;
            g.sites.push_back(s);
        }
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            if (c + 1 < cols)
                g.edges.push_back({id(r, c), id(r, c + 1), edge_type::first,
                                   p_rap, q_rap});
            if (r + 1 < rows)
                g.edges.push_back({id(r, c), id(r + 1, c), edge_type::second,
                                   p_rap, q_rap});
        }
    return g;
}

spectral_assignment assign_alphas(const lattice_graph& g,
                                  const elliptic_params& params,
                                  bool physical) {
    spectral_assignment a;
    a.eta = params.eta;
    const double re_eta = params.eta.real();
    for (const auto& e : g.edges) {
        const double d = e.p_rap - e.q_rap;
        const cx al = e.type == edge_type::first ? cx(d) : params.eta - d;
        if (physical && (al.real() <= 0.0 || al.real() >= re_eta))
            throw bad_domain("edge " + std::to_string(e.from) + "-" +
                             std::to_string(e.to) +
                             " has alpha outside (0, Re eta)");
        a.alpha.push_back(al);
    }
    return a;
}

std::vector<std::pair<int, double>> check_sum_rule(
    const lattice_graph& g, const spectral_assignment& assignment) {
    if (assignment.alpha.size() != g.edges.size())
        throw bad_input("assignment does not match the edge list");
    std::map<int, kahan_sum> sums;
    for (size_t i = 0; i < g.edges.size(); ++i) {
        sums[g.edges[i].from].add(assignment.alpha[i].real());
        sums[g.edges[i].to].add(assignment.alpha[i].real());
    }
    std::vector<std::pair<int, double>> out;
    for (const auto& s : g.sites)
        if (!s.boundary)
            out.emplace_back(s.id,
                             std::abs(sums[s.id].value() - 2.0 * assignment.eta.real()));
    return out;
}

cx partition_function(const lattice_graph& g, const elliptic_params& params,
                      const quadrature_control& qctl) {
    g.validate();
    const int m = g.internal_count();
    if (m > 4)
        throw too_many_internal_sites(
            "nested quadrature supports at most 4 internal sites, got " +
            std::to_string(m));

    const series_control ctl{};
    auto assignment = assign_alphas(g, params, /*physical=*/false);

    // Map each site to a fixed spin (boundary) or an integration slot.
    std::vector<double> fixed(g.sites.size(), 0.0);
    std::vector<int> slot(g.sites.size(), -1);
    std::vector<int> internal_idx;
    for (size_t i = 0; i < g.sites.size(); ++i) {
        if (g.sites[i].boundary) {
            fixed[i] = g.sites[i].spin;
        } else {
            slot[i] = static_cast<int>(internal_idx.size());
            internal_idx.push_back(static_cast<int>(i));
        }
    }
    std::vector<int> efrom(g.edges.size()), eto(g.edges.size());
    std::vector<cx> kap(g.edges.size());
    for (size_t i = 0; i < g.edges.size(); ++i) {
        efrom[i] = index_of(g, g.edges[i].from);
        eto[i] = index_of(g, g.edges[i].to);
        kap[i] = kappa(assignment.alpha[i], params, ctl);
    }

    auto integrand = [&](const std::vector<double>& xint) {
        cx prod(1.0, 0.0);
        for (size_t i = 0; i < g.edges.size(); ++i) {
            const int a = efrom[i], b = eto[i];
            const cx xa(slot[a] >= 0 ? xint[slot[a]] : fixed[a]);
            const cx xb(slot[b] >= 0 ? xint[slot[b]] : fixed[b]);
            weight_spec ws{params, assignment.alpha[i],
                           weight_spec::normalization::raw};
            prod *= weight_W_cx(ws, xa, xb, ctl) / kap[i];
        }
        for (int i : internal_idx)
            prod *= weight_S_cx(params, cx(xint[slot[i]]), ctl);
        return prod;
    };

    auto nested = [&](int points) {
        if (m == 0) return integrand({});
        const double h = 2.0 * pi / points;
        std::vector<double> xint(m, 0.0);
        // Fixed evaluation order keeps the compensated sums deterministic.
        kahan_sum_cx total;
        std::vector<int> k(m, 0);
        while (true) {
            for (int d = 0; d < m; ++d) xint[d] = h * k[d];
            total.add(integrand(xint));
            int d = m - 1;
            while (d >= 0 && ++k[d] == points) k[d--] = 0;
            if (d < 0) break;
        }
        return std::pow(h, m) * total.value();
    };

    if (m == 0) return integrand({});
    if (qctl.points < 8 || (qctl.points & (qctl.points - 1)) != 0)
        throw bad_input("quadrature points must be a power of two, at least 8");
    const cx coarse = nested(qctl.points);
    const cx fine = nested(2 * qctl.points);
    if (std::abs(coarse / fine - 1.0) > qctl.rel_tol)
        throw quadrature_not_converged(
            "partition-function doubling changed the value by " +
            std::to_string(std::abs(coarse / fine - 1.0)));
    return fine;
}

lattice_graph star_triangle_move(const lattice_graph& g, int center_id) {
    const lattice_site& center = g.site(center_id);
    if (center.boundary)
        throw not_a_star("center site must be internal");

    std::vector<int> touching;
    for (size_t i = 0; i < g.edges.size(); ++i)
        if (g.edges[i].from == center_id || g.edges[i].to == center_id)
            touching.push_back(static_cast<int>(i));
    if (touching.size() != 3)
        throw not_a_star("center site must have exactly 3 edges");

    // Star pattern around the center: one first-type edge on (p,r) and two
    // second-type edges on (q,r) and (p,q). The triangle inherits (q,r)
    // first, (p,r) second, (p,q) first on the opposite spin pairs.
    const lattice_edge* first_e = nullptr;
    std::vector<const lattice_edge*> second_e;
    for (int i : touching) {
        if (g.edges[i].type == edge_type::first)
            first_e = first_e ? throw not_a_star("two first-type legs")
                              : &g.edges[i];
        else
            second_e.push_back(&g.edges[i]);
    }
    if (!first_e || second_e.size() != 2)
        throw not_a_star("star needs one first-type and two second-type legs");

    const double p = first_e->p_rap, r = first_e->q_rap;
    // Of the second-type legs, one carries (p, q), the other (q, r).
    const lattice_edge* e_pq = nullptr;
    const lattice_edge* e_qr = nullptr;
    for (const auto* e : second_e) {
        if (same_rap(e->p_rap, p))
            e_pq = e;
        else if (same_rap(e->q_rap, r))
            e_qr = e;
    }
    if (!e_pq || !e_qr || e_pq == e_qr)
        throw not_a_star("leg rapidities do not share the star pattern");
    const double q = e_pq->q_rap;
    if (!same_rap(e_qr->p_rap, q))
        throw not_a_star("leg rapidities do not close on a common q");

    auto other = [&](const lattice_edge* e) {
        return e->from == center_id ? e->to : e->from;
    };
    const int x1 = other(e_qr), x2 = other(first_e), x3 = other(e_pq);

    lattice_graph out;
    for (const auto& s : g.sites)
        if (s.id != center_id) out.sites.push_back(s);
    for (size_t i = 0; i < g.edges.size(); ++i)
        if (std::find(touching.begin(), touching.end(), static_cast<int>(i)) ==
            touching.end())
            out.edges.push_back(g.edges[i]);
    out.edges.push_back({x2, x3, edge_type::first, q, r});
    out.edges.push_back({x1, x3, edge_type::second, p, r});
    out.edges.push_back({x1, x2, edge_type::first, p, q});
    out.validate();
    return out;
}

} // namespace ellstr
