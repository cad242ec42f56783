#pragma once

// Exact low-temperature contour expansions on a Domain: partition function,
// two-point observables f_a^up / f_a^down, and multipoint observables f^eps.
//
// Configurations live on the dual graph: a dual edge joins two adjacent face
// centers and crosses one interior primal edge.  An observable configuration
// additionally carries half-edges (stubs) from marked primal edges into an
// adjacent face; dual edges crossing a marked primal edge are excluded, since
// in the spin expansion the half-row factors at a marked edge can only ever
// produce one half of that dual edge.  Parity rule: the total incidence
// (dual edges + stubs) at every face is even.

#include <atomic>
#include <bit>
#include <cstdlib>
#include <functional>
#include <thread>

#include "ising/coupling.hpp"
#include "ising/lattice.hpp"
#include "ising/numerics.hpp"

namespace ising {

enum class TurnRule { left, right };

struct StubSpec {
  Coord2 edge;  // marked primal edge
  Coord2 dir;   // unit doubled step from edge midpoint to the stub face
};

struct PathData {
  // pairing[i] = {source index, target index} with source < target, sorted
  std::vector<std::pair<int, int>> pairing;
  std::vector<int> qturns;  // per path, signed quarter-turn count (ccw > 0)
  int crossing_sign = 1;
};

namespace detail {

struct DualItem {
  int side;        // 0=E,1=N,2=W,3=S relative to the face
  int other_face;  // -1 for a stub
  int stub_id;     // -1 for a dual edge
  int dual_idx;    // index into the dual edge list, -1 for a stub
};

inline int side_of(Coord2 from_face, Coord2 toward) {
  int dx = toward.x - from_face.x, dy = toward.y - from_face.y;
  if (dx > 0) return 0;
  if (dy > 0) return 1;
  if (dx < 0) return 2;
  return 3;
}

// Turn from travel direction (side index) d_in to d_out: +1 left, 0 straight,
// -1 right; d_out == d_in + 2 (mod 4) would be a U-turn and cannot occur.
inline int turn_of(int d_in, int d_out) {
  int d = (d_out - d_in + 4) % 4;
  if (d == 0) return 0;
  if (d == 1) return 1;
  if (d == 3) return -1;
  throw std::logic_error("contour walk: U-turn encountered");
}

}  // namespace detail

// Shared machinery for all contour enumerations over one domain.
class ContourEngine {
 public:
  ContourEngine(const Domain& dom, std::vector<StubSpec> stubs,
                TurnRule rule = TurnRule::left)
      : dom_(dom), stubs_(std::move(stubs)), rule_(rule) {
    std::map<Coord2, int> fidx;
    for (size_t i = 0; i < dom_.faces.size(); ++i) fidx[dom_.faces[i]] = int(i);
    std::set<Coord2> marked;
    for (const auto& s : stubs_) {
      if (!s.edge.is_edge()) throw std::invalid_argument("stub: not an edge");
      Coord2 f = s.edge + s.dir;
      if (!f.is_face() || !dom_.has_face(f))
        throw std::invalid_argument("stub: direction does not point to a domain face");
      marked.insert(s.edge);
    }
    // Dual edges between adjacent faces, skipping marked primal edges.
    for (Coord2 f : dom_.faces)
      for (Coord2 d : {Coord2{2, 0}, Coord2{0, 2}}) {
        Coord2 g = f + d;
        if (!dom_.has_face(g)) continue;
        Coord2 cross = {(f.x + g.x) / 2, (f.y + g.y) / 2};
        if (marked.count(cross)) continue;
        dual_a_.push_back(fidx[f]);
        dual_b_.push_back(fidx[g]);
      }
    n_faces_ = int(dom_.faces.size());
    n_dual_ = int(dual_a_.size());
    if (n_dual_ > 24) throw std::invalid_argument("contour enumeration: dual-edge cap (24) exceeded");

    // Order edges so faces get fully decided early (row-major face order).
    std::vector<int> order(n_dual_);
    for (int i = 0; i < n_dual_; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int i, int j) {
      int mi = std::max(dual_a_[i], dual_b_[i]), mj = std::max(dual_a_[j], dual_b_[j]);
      if (mi != mj) return mi < mj;
      return std::min(dual_a_[i], dual_b_[i]) < std::min(dual_a_[j], dual_b_[j]);
    });
    std::vector<int> a2(n_dual_), b2(n_dual_);
    for (int i = 0; i < n_dual_; ++i) {
      a2[i] = dual_a_[order[i]];
      b2[i] = dual_b_[order[i]];
    }
    dual_a_ = a2;
    dual_b_ = b2;

    undecided_init_.assign(n_faces_, 0);
    for (int i = 0; i < n_dual_; ++i) {
      ++undecided_init_[dual_a_[i]];
      ++undecided_init_[dual_b_[i]];
    }
    target_parity_.assign(n_faces_, 0);
    face_items_.assign(n_faces_, {});
    for (size_t s = 0; s < stubs_.size(); ++s) {
      Coord2 f = stubs_[s].edge + stubs_[s].dir;
      int fi = fidx[f];
      target_parity_[fi] ^= 1;
      face_items_[fi].push_back(
          {detail::side_of(f, stubs_[s].edge), -1, int(s), -1});
    }
    for (int i = 0; i < n_dual_; ++i) {
      Coord2 fa = dom_.faces[dual_a_[i]], fb = dom_.faces[dual_b_[i]];
      face_items_[dual_a_[i]].push_back({detail::side_of(fa, fb), dual_b_[i], -1, i});
      face_items_[dual_b_[i]].push_back({detail::side_of(fb, fa), dual_a_[i], -1, i});
    }
  }

  int n_dual_edges() const { return n_dual_; }

  // Enumerate all parity-valid configurations; calls visit(mask, n_edges).
  // Deterministic threading: the task split depends only on the problem size,
  // and per-task results are combined in task order.
  template <typename Acc>
  Acc enumerate(const std::function<Acc(uint32_t, int)>& weight) const {
    for (int f = 0; f < n_faces_; ++f)
      if (undecided_init_[f] == 0 && target_parity_[f] != 0) return Acc(0);

    int threads = 1;
    if (const char* env = std::getenv("ISING_THREADS")) {
      threads = std::max(1, std::atoi(env));
    }
    int split_bits = n_dual_ >= 14 ? 6 : 0;  // fixed, independent of thread count
    int n_tasks = 1 << split_bits;

    std::vector<Acc> partial(size_t(n_tasks), Acc(0));
    auto run_task = [&](int t) {
      std::vector<int> parity(size_t(n_faces_), 0), undecided = undecided_init_;
      Acc acc(0);
      // Preset the first split_bits edges from the task index.
      bool ok = true;
      for (int i = 0; i < split_bits && ok; ++i) {
        bool inc = (t >> i) & 1;
        ok = decide(i, inc, parity, undecided);
      }
      if (ok) {
        uint32_t mask = uint32_t(t);
        dfs(split_bits, mask, parity, undecided, weight, acc);
      }
      partial[size_t(t)] = acc;
    };
    if (threads == 1 || n_tasks == 1) {
      for (int t = 0; t < n_tasks; ++t) run_task(t);
    } else {
      std::vector<std::thread> pool;
      std::atomic<int> next{0};
      int nw = std::min(threads, n_tasks);
      for (int w = 0; w < nw; ++w)
        pool.emplace_back([&] {
          for (int t = next.fetch_add(1); t < n_tasks; t = next.fetch_add(1)) run_task(t);
        });
      for (auto& th : pool) th.join();
    }
    Acc total(0);
    for (int t = 0; t < n_tasks; ++t) total += partial[size_t(t)];
    return total;
  }

  // Walk the paths of a parity-valid configuration.
  PathData extract_paths(uint32_t mask, TurnRule rule) const {
    PathData out;
    // Items are consumed as the walk traverses them; a second pass through a
    // face is forced along the remaining pair, so no edge is used twice and
    // the path never crosses itself.
    std::vector<bool> used_stub(stubs_.size(), false);
    uint32_t used_dual = 0;
    std::vector<std::pair<int, int>> pairs;
    for (size_t s0 = 0; s0 < stubs_.size(); ++s0) {
      if (used_stub[s0]) continue;
      used_stub[s0] = true;
      int face = face_index(stubs_[s0].edge + stubs_[s0].dir);
      int dir = detail::side_of(stubs_[s0].edge, stubs_[s0].edge + stubs_[s0].dir);
      int q = 0;
      int end_stub = -1;
      for (int guard = 0; guard < 8 * (n_dual_ + 4); ++guard) {
        const detail::DualItem* cand[4] = {nullptr, nullptr, nullptr, nullptr};
        int n_cand = 0;
        for (const auto& it : face_items_[size_t(face)]) {
          if (it.dual_idx >= 0 &&
              (!((mask >> it.dual_idx) & 1) || ((used_dual >> it.dual_idx) & 1)))
            continue;
          if (it.stub_id >= 0 && used_stub[size_t(it.stub_id)]) continue;
          cand[it.side] = &it;
          ++n_cand;
        }
        const detail::DualItem* pick = nullptr;
        if (n_cand == 1) {
          for (int s = 0; s < 4; ++s)
            if (cand[s]) pick = cand[s];
        } else if (n_cand == 3) {
          int want = rule == TurnRule::left ? (dir + 1) % 4 : (dir + 3) % 4;
          pick = cand[want];
          if (!pick) throw std::logic_error("contour walk: missing turn candidate");
        } else {
          throw std::logic_error("contour walk: bad incidence count");
        }
        q += detail::turn_of(dir, pick->side);
        dir = pick->side;
        if (pick->stub_id >= 0) {
          end_stub = pick->stub_id;
          used_stub[size_t(end_stub)] = true;
          break;
        }
        used_dual |= 1u << pick->dual_idx;
        face = pick->other_face;
      }
      if (end_stub < 0) throw std::logic_error("contour walk: path failed to close");
      pairs.push_back({int(s0), end_stub});
      out.qturns.push_back(q);
    }
    out.pairing = pairs;
    int crossings = 0;
    for (size_t j = 0; j < pairs.size(); ++j)
      for (size_t k = j + 1; k < pairs.size(); ++k) {
        auto [s1, d1] = pairs[j];
        auto [s2, d2] = pairs[k];
        if (s2 > d2) std::swap(s2, d2);
        if (s1 > d1) std::swap(s1, d1);
        if (s1 < s2 && s2 < d1 && d1 < d2) ++crossings;
        if (s2 < s1 && s1 < d2 && d2 < d1) ++crossings;
      }
    out.crossing_sign = crossings % 2 == 0 ? 1 : -1;
    return out;
  }

  TurnRule rule() const { return rule_; }

 private:
  int face_index(Coord2 f) const {
    auto it = std::lower_bound(dom_.faces.begin(), dom_.faces.end(), f,
                               detail::lex_yx);
    return int(it - dom_.faces.begin());
  }

  bool decide(int i, bool include, std::vector<int>& parity,
              std::vector<int>& undecided) const {
    int fa = dual_a_[i], fb = dual_b_[i];
    if (include) {
      parity[fa] ^= 1;
      parity[fb] ^= 1;
    }
    bool ok = true;
    if (--undecided[fa] == 0 && parity[fa] != target_parity_[fa]) ok = false;
    if (--undecided[fb] == 0 && parity[fb] != target_parity_[fb]) ok = false;
    return ok;
  }

  void undo(int i, bool include, std::vector<int>& parity,
            std::vector<int>& undecided) const {
    int fa = dual_a_[i], fb = dual_b_[i];
    if (include) {
      parity[fa] ^= 1;
      parity[fb] ^= 1;
    }
    ++undecided[fa];
    ++undecided[fb];
  }

  template <typename Acc>
  void dfs(int depth, uint32_t mask, std::vector<int>& parity,
           std::vector<int>& undecided, const std::function<Acc(uint32_t, int)>& weight,
           Acc& acc) const {
    if (depth == n_dual_) {
      acc += weight(mask, std::popcount(mask));
      return;
    }
    for (int inc = 0; inc < 2; ++inc) {
      bool ok = decide(depth, inc != 0, parity, undecided);
      if (ok) {
        uint32_t m2 = inc ? (mask | (1u << depth)) : mask;
        dfs(depth + 1, m2, parity, undecided, weight, acc);
      }
      undo(depth, inc != 0, parity, undecided);
    }
  }

  const Domain& dom_;
  std::vector<StubSpec> stubs_;
  TurnRule rule_;
  int n_faces_ = 0, n_dual_ = 0;
  std::vector<int> dual_a_, dual_b_;
  std::vector<int> undecided_init_, target_parity_;
  std::vector<std::vector<detail::DualItem>> face_items_;
};

inline double partition_function_contour(const Domain& dom, const IsingCoupling& k) {
  ContourEngine eng(dom, {});
  double alpha = k.alpha;
  return eng.enumerate<double>(
      [&](uint32_t, int n) { return std::pow(alpha, n); });
}

// A complex-valued function on (a subset of) the edges of a domain.
using ComplexField = std::map<Coord2, cd>;

struct SourceSpec {
  Coord2 a;
  int stub = +1;  // +1: half-edge upward (to a + i/2); -1: downward
};

namespace detail {

// Numerator sum for a two-source configuration class.  phase_shift adds a
// constant number of quarter turns to every path (used for f^down's e^{-i pi/2}).
inline cd two_stub_sum(const Domain& dom, const IsingCoupling& k, StubSpec s_a,
                       StubSpec s_z, int extra_qturns, TurnRule rule) {
  ContourEngine eng(dom, {s_a, s_z}, rule);
  double alpha = k.alpha;
  return eng.enumerate<cd>([&](uint32_t mask, int n) {
    PathData pd = eng.extract_paths(mask, rule);
    // One path; L = |dual edges| + 1.
    return std::pow(alpha, n + 1) * lambda_pow(-(pd.qturns[0] + extra_qturns));
  });
}

}  // namespace detail

// f_a^up (stub=+1) or f_a^down (stub=-1), as a field over all edges z != a.
// For each z both adjacent target faces in the domain are summed.
inline ComplexField two_point_observable(const Domain& dom, SourceSpec src,
                                         const IsingCoupling& k,
                                         TurnRule rule = TurnRule::left) {
  if (!src.a.is_hedge())
    throw std::invalid_argument("two_point_observable: source must be horizontal");
  double Z = partition_function_contour(dom, k);
  Coord2 stub_dir{0, src.stub > 0 ? 1 : -1};
  int extra = src.stub > 0 ? 0 : 2;  // f^down carries e^{-i pi/2} = two quarter turns
  ComplexField out;
  bool source_ok = dom.has_face(src.a + stub_dir);
  for (Coord2 z : dom.edges) {
    if (z == src.a) continue;
    cd val = 0;
    if (source_ok) {
      std::array<Coord2, 2> dirs = z.is_hedge()
                                       ? std::array<Coord2, 2>{Coord2{0, 1}, Coord2{0, -1}}
                                       : std::array<Coord2, 2>{Coord2{1, 0}, Coord2{-1, 0}};
      for (Coord2 d : dirs) {
        if (!dom.has_face(z + d)) continue;
        val += detail::two_stub_sum(dom, k, {src.a, stub_dir}, {z, d}, extra, rule);
      }
    }
    out[z] = val / Z;
  }
  return out;
}

struct MultiSource {
  Coord2 z;    // marked primal edge
  Coord2 o;    // unit doubled step: orientation of the dual edge through z
  cd eps;      // square root of o (as complex o.x + i o.y); sign choice matters
};

struct MultiSourceSpec {
  std::vector<MultiSource> sources;  // ordered z_1 .. z_{2m}
};

// f^eps(z_1..z_{2m}) = (1/Z) sum_gamma alpha^{L} sign(gamma)
//                              prod_j (eps_{d_j}/eps_{s_j}) e^{-i W(pi_j)/2},
// L = #dual edges + m.  Frozen conventions: each path is oriented from the
// smaller to the greater source index of its pair, the eps ratio is
// eps_destination / eps_source, and the winding factor is lambda^{+Q} where Q
// counts ccw-positive quarter turns along the oriented path.  With these
// choices the m=1 case reproduces the fermion two-point correlations for all
// four arrow combinations, and m=2 matches the four-point correlations.
inline cd multipoint_observable(const Domain& dom, const MultiSourceSpec& spec,
                                const IsingCoupling& k,
                                TurnRule rule = TurnRule::left) {
  size_t n = spec.sources.size();
  if (n == 0 || n % 2 != 0)
    throw std::invalid_argument("multipoint_observable: need an even, positive source count");
  std::vector<StubSpec> stubs;
  for (const auto& s : spec.sources) {
    cd o = cd(s.o.x, s.o.y);
    if (std::abs(s.eps * s.eps - o) > 1e-12)
      throw std::invalid_argument("multipoint_observable: eps^2 != o");
    stubs.push_back({s.z, s.o});
  }
  ContourEngine eng(dom, stubs, rule);
  double alpha = k.alpha;
  int m = int(n / 2);
  cd num = eng.enumerate<cd>([&](uint32_t mask, int nedges) {
    PathData pd = eng.extract_paths(mask, rule);
    cd w = std::pow(alpha, nedges + m) * double(pd.crossing_sign);
    for (size_t j = 0; j < pd.pairing.size(); ++j) {
      auto [s, d] = pd.pairing[j];
      w *= spec.sources[size_t(d)].eps / spec.sources[size_t(s)].eps *
           lambda_pow(pd.qturns[j]);
    }
    return w;
  });
  return num / partition_function_contour(dom, k);
}

// g(z_{2m}) = (lambda/eps) f^eps + (lambda/eps~) f^{eps~}, where eps~ squares
// to the opposite orientation of z_{2m}.  Independent of both sign choices.
inline cd observable_combination_g(const Domain& dom, MultiSourceSpec spec_head,
                                   Coord2 z_last, const IsingCoupling& k,
                                   int eps_sign = +1, int eps_tilde_sign = +1) {
  Coord2 o = z_last.is_hedge() ? Coord2{0, 1} : Coord2{1, 0};
  cd oc(o.x, o.y);
  cd eps = std::sqrt(oc) * double(eps_sign);
  cd eps_t = std::sqrt(-oc) * double(eps_tilde_sign);
  MultiSourceSpec s1 = spec_head, s2 = spec_head;
  s1.sources.push_back({z_last, o, eps});
  s2.sources.push_back({z_last, Coord2{-o.x, -o.y}, eps_t});
  cd f1 = multipoint_observable(dom, s1, k);
  cd f2 = multipoint_observable(dom, s2, k);
  return lambda_8 / eps * f1 + lambda_8 / eps_t * f2;
}

// Brute-force spin enumeration on a box with all-plus boundary conditions.
// Returns Z+ and the expectation of the product of spins at `verts`.
struct SpinEnumResult {
  double z_plus = 0;
  double correlation = 1;  // E+[ prod spins ]
};

inline SpinEnumResult spin_enum_oracle(const Domain& dom, const IsingCoupling& k,
                                       const std::vector<Coord2>& verts = {}) {
  // Vertices of the closure; interior ones (all four faces present) are free.
  std::set<Coord2> vset;
  for (Coord2 f : dom.faces)
    for (int dx : {-1, 1})
      for (int dy : {-1, 1}) vset.insert({f.x + dx, f.y + dy});
  std::vector<Coord2> free_verts;
  std::map<Coord2, int> vfree;
  for (Coord2 v : vset) {
    bool interior = true;
    for (int dx : {-1, 1})
      for (int dy : {-1, 1})
        if (!dom.has_face({v.x + dx, v.y + dy})) interior = false;
    if (interior) {
      vfree[v] = int(free_verts.size());
      free_verts.push_back(v);
    }
  }
  if (free_verts.size() > 20)
    throw std::invalid_argument("spin_enum_oracle: more than 20 free spins");
  for (Coord2 v : verts)
    if (!v.is_vertex() || !vset.count(v))
      throw std::invalid_argument("spin_enum_oracle: bad vertex");

  // Bonds = edges of the domain, each joining two closure vertices.
  std::vector<std::pair<int, int>> bonds;  // index into free_verts, -1 = fixed +1
  auto vid = [&](Coord2 v) { auto it = vfree.find(v); return it == vfree.end() ? -1 : it->second; };
  for (Coord2 e : dom.edges) {
    Coord2 u = e.is_hedge() ? Coord2{e.x - 1, e.y} : Coord2{e.x, e.y - 1};
    Coord2 w = e.is_hedge() ? Coord2{e.x + 1, e.y} : Coord2{e.x, e.y + 1};
    bonds.push_back({vid(u), vid(w)});
  }
  std::vector<int> corr_ids;
  for (Coord2 v : verts) corr_ids.push_back(vid(v));

  SpinEnumResult out;
  double corr_num = 0;
  uint32_t n_cfg = 1u << free_verts.size();
  for (uint32_t cfg = 0; cfg < n_cfg; ++cfg) {
    auto spin = [&](int id) { return id < 0 ? 1 : (((cfg >> id) & 1) ? -1 : 1); };
    double energy = 0;  // -H(s) = sum of s_u s_w over bonds
    for (auto [u, w] : bonds) energy += spin(u) * spin(w);
    double wgt = std::exp(k.beta * energy);
    out.z_plus += wgt;
    int prod = 1;
    for (int id : corr_ids) prod *= spin(id);
    corr_num += wgt * prod;
  }
  out.correlation = corr_num / out.z_plus;
  return out;
}

}  // namespace ising
