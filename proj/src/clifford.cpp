#include "offres/clifford.hpp"

#include <array>
#include <bit>
#include <deque>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

namespace offres {

namespace {
const cxd kI(0.0, 1.0);
constexpr double kPi = std::numbers::pi;
}  // namespace

PauliOp PauliOp::from_xz(int n, unsigned x, unsigned z, bool negative) {
    PauliOp p;
    p.n = n;
    p.x = x;
    p.z = z;
    // i^popcount(x&z) makes the representative Hermitian (Y = i X Z)
    p.phase = (std::popcount(x & z) + (negative ? 2 : 0)) % 4;
    return p;
}

bool PauliOp::negative_sign() const {
    return ((phase - std::popcount(x & z)) % 4 + 4) % 4 == 2;
}

std::string PauliOp::label() const {
    std::string s(negative_sign() ? "-" : "+");
    for (int q = 0; q < n; ++q) {
        bool bx = (x >> q) & 1, bz = (z >> q) & 1;
        s += bx ? (bz ? 'Y' : 'X') : (bz ? 'Z' : 'I');
    }
    return s;
}

Mat PauliOp::matrix() const {
    std::string labels;
    for (int q = 0; q < n; ++q) {
        bool bx = (x >> q) & 1, bz = (z >> q) & 1;
        labels += bx ? (bz ? 'Y' : 'X') : (bz ? 'Z' : 'I');
    }
    cxd scale = std::pow(kI, ((phase - std::popcount(x & z)) % 4 + 4) % 4);
    return scale * pauli_matrix(labels);
}

PauliOp PauliOp::times(const PauliOp& other) const {
    PauliOp p;
    p.n = n;
    p.x = x ^ other.x;
    p.z = z ^ other.z;
    // moving other's X past this Z gives (-1)^{popcount(z & other.x)}
    p.phase = (phase + other.phase + 2 * std::popcount(z & other.x)) % 4;
    return p;
}

bool PauliOp::commutes_with(const PauliOp& other) const {
    return ((std::popcount(x & other.z) + std::popcount(z & other.x)) % 2) == 0;
}

CliffordElement CliffordElement::identity(int n) {
    CliffordElement c;
    c.n = n;
    for (int q = 0; q < n; ++q) c.images.push_back(PauliOp::from_xz(n, 1u << q, 0));
    for (int q = 0; q < n; ++q) c.images.push_back(PauliOp::from_xz(n, 0, 1u << q));
    return c;
}

PauliOp CliffordElement::apply(const PauliOp& p) const {
    // p is i^phase times the ordered product of X_q^{x} Z_q^{z}; conjugation
    // maps the ordered product to the product of generator images
    PauliOp acc;
    acc.n = n;
    bool first = true;
    for (int q = 0; q < n; ++q) {
        if ((p.x >> q) & 1) {
            acc = first ? images[q] : acc.times(images[q]);
            first = false;
        }
        if ((p.z >> q) & 1) {
            acc = first ? images[n + q] : acc.times(images[n + q]);
            first = false;
        }
    }
    if (first) acc = PauliOp{n, 0, 0, 0};
    acc.phase = (acc.phase + p.phase) % 4;
    return acc;
}

CliffordElement CliffordElement::compose_after(const CliffordElement& first) const {
    CliffordElement out;
    out.n = n;
    for (const auto& img : first.images) out.images.push_back(apply(img));
    return out;
}

namespace {

// 2n x 2n bit-matrix inversion over F2; columns are generator images
std::vector<unsigned> invert_f2(std::vector<unsigned> cols, int dim) {
    std::vector<unsigned> inv(dim);
    for (int i = 0; i < dim; ++i) inv[i] = 1u << i;
    for (int col = 0; col < dim; ++col) {
        int pivot = -1;
        for (int r = col; r < dim; ++r)
            if ((cols[r] >> col) & 1) {
                pivot = r;
                break;
            }
        if (pivot < 0) throw std::runtime_error("tableau not invertible");
        std::swap(cols[col], cols[pivot]);
        std::swap(inv[col], inv[pivot]);
        for (int r = 0; r < dim; ++r) {
            if (r != col && ((cols[r] >> col) & 1)) {
                cols[r] ^= cols[col];
                inv[r] ^= inv[col];
            }
        }
    }
    return inv;
}

unsigned pack_vec(const PauliOp& p, int n) {
    unsigned v = 0;
    for (int q = 0; q < n; ++q) {
        v |= ((p.x >> q) & 1) << q;
        v |= ((p.z >> q) & 1) << (n + q);
    }
    return v;
}

}  // namespace

CliffordElement CliffordElement::inverse() const {
    int dim = 2 * n;
    // symplectic matrix M: M e_g = packed image vector of generator g
    std::vector<unsigned> mrows(dim, 0);
    for (int g = 0; g < dim; ++g) {
        unsigned img = pack_vec(images[g], n);
        for (int b = 0; b < dim; ++b)
            if ((img >> b) & 1) mrows[b] |= 1u << g;
    }
    auto minv = invert_f2(mrows, dim);

    CliffordElement out;
    out.n = n;
    for (int g = 0; g < dim; ++g) {
        unsigned pre = 0;  // column g of M^-1
        for (int r = 0; r < dim; ++r)
            if ((minv[r] >> g) & 1) pre |= 1u << r;
        unsigned px = 0, pz = 0;
        for (int q = 0; q < n; ++q) {
            if ((pre >> q) & 1) px |= 1u << q;
            if ((pre >> (n + q)) & 1) pz |= 1u << q;
        }
        PauliOp cand = PauliOp::from_xz(n, px, pz);
        PauliOp round = apply(cand);
        // the image equals the generator up to sign; absorb it in the preimage
        PauliOp gen = (g < n) ? PauliOp::from_xz(n, 1u << g, 0)
                              : PauliOp::from_xz(n, 0, 1u << (g - n));
        if (round.phase != gen.phase) cand.phase = (cand.phase + 2) % 4;
        out.images.push_back(cand);
    }
    return out;
}

bool CliffordElement::operator==(const CliffordElement& other) const {
    if (n != other.n) return false;
    for (size_t i = 0; i < images.size(); ++i) {
        if (images[i].x != other.images[i].x || images[i].z != other.images[i].z ||
            images[i].phase != other.images[i].phase)
            return false;
    }
    return true;
}

bool CliffordElement::is_identity() const { return *this == identity(n); }

Mat CliffordElement::unitary() const {
    int dim = 1 << n;
    // |c0> stabilized by every img(Z_q); project a reference vector
    Mat proj = Mat::Identity(dim, dim);
    for (int q = 0; q < n; ++q)
        proj = 0.5 * (Mat::Identity(dim, dim) + images[n + q].matrix()) * proj;
    Vec c0;
    for (int ref = 0; ref < dim; ++ref) {
        c0 = proj.col(ref);
        if (c0.norm() > 1e-6) break;
    }
    c0.normalize();
    // deterministic global phase: first sizable amplitude made real positive
    for (int i = 0; i < dim; ++i)
        if (std::abs(c0(i)) > 1e-8) {
            c0 *= std::conj(c0(i)) / std::abs(c0(i));
            break;
        }
    Mat u(dim, dim);
    for (int j = 0; j < dim; ++j) {
        // U|j> = img(X^bits(j)) |c0>; qubit 0 is the most significant bit
        Vec col = c0;
        for (int q = 0; q < n; ++q) {
            int bit = (j >> (n - 1 - q)) & 1;
            if (bit) col = images[q].matrix() * col;
        }
        u.col(j) = col;
    }
    return u;
}

std::uint32_t CliffordElement::symplectic_key() const {
    std::uint32_t key = 0;
    int dim = 2 * n;
    for (int g = 0; g < dim; ++g) key |= pack_vec(images[g], n) << (g * dim);
    return key;
}

CliffordElement sample_clifford(int n, std::mt19937_64& rng) {
    if (n != 1 && n != 2) throw std::invalid_argument("sample_clifford: 1 or 2 qubits");
    int dim = 2 * n;
    auto symplectic_inner = [&](unsigned a, unsigned b) {
        unsigned ax = a & ((1u << n) - 1), az = a >> n;
        unsigned bx = b & ((1u << n) - 1), bz = b >> n;
        return (std::popcount(ax & bz) + std::popcount(az & bx)) % 2;
    };
    // draw a uniform symplectic basis x_0, z_0, (x_1, z_1)
    std::vector<unsigned> basis;
    auto draw = [&](auto&& admissible) {
        std::vector<unsigned> pool;
        for (unsigned v = 1; v < (1u << dim); ++v)
            if (admissible(v)) pool.push_back(v);
        std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
        return pool[pick(rng)];
    };
    unsigned x0 = draw([](unsigned) { return true; });
    unsigned z0 = draw([&](unsigned v) { return symplectic_inner(x0, v) == 1; });
    basis = {x0, z0};
    if (n == 2) {
        unsigned x1 = draw([&](unsigned v) {
            return symplectic_inner(x0, v) == 0 && symplectic_inner(z0, v) == 0;
        });
        unsigned z1 = draw([&](unsigned v) {
            return symplectic_inner(x0, v) == 0 && symplectic_inner(z0, v) == 0 &&
                   symplectic_inner(x1, v) == 1;
        });
        basis = {x0, x1, z0, z1};
    }
    CliffordElement c;
    c.n = n;
    std::uniform_int_distribution<int> sign(0, 1);
    for (unsigned v : basis) {
        unsigned px = v & ((1u << n) - 1), pz = v >> n;
        c.images.push_back(PauliOp::from_xz(n, px, pz, sign(rng) == 1));
    }
    return c;
}

namespace {

struct GenDef {
    const char* name;  // abstract generator: h0, h1, s0, s1, cx
    int cost;
    CliffordElement tableau;
};

CliffordElement h_tableau(int n, int q) {
    CliffordElement c = CliffordElement::identity(n);
    c.images[q] = PauliOp::from_xz(n, 0, 1u << q);              // X -> Z
    c.images[n + q] = PauliOp::from_xz(n, 1u << q, 0);          // Z -> X
    return c;
}

CliffordElement s_tableau(int n, int q) {
    CliffordElement c = CliffordElement::identity(n);
    c.images[q] = PauliOp::from_xz(n, 1u << q, 1u << q);        // X -> Y
    return c;
}

CliffordElement cx_tableau() {  // control qubit 0, target qubit 1
    CliffordElement c = CliffordElement::identity(2);
    c.images[0] = PauliOp::from_xz(2, 0b11, 0);                 // XI -> XX
    c.images[3] = PauliOp::from_xz(2, 0, 0b11);                 // IZ -> ZZ
    return c;
}

struct BfsEntry {
    int dist = -1;
    std::uint32_t prev = 0;
    int gen = -1;
};

struct DecompositionTable {
    std::vector<GenDef> gens;
    std::unordered_map<std::uint32_t, BfsEntry> map;

    explicit DecompositionTable(int n) {
        gens.push_back({"h0", 0, h_tableau(n, 0)});
        gens.push_back({"s0", 0, s_tableau(n, 0)});
        if (n == 2) {
            gens.push_back({"h1", 0, h_tableau(n, 1)});
            gens.push_back({"s1", 0, s_tableau(n, 1)});
            gens.push_back({"cx", 1, cx_tableau()});
        }
        // 0-1 BFS over the symplectic group by CX count
        CliffordElement id = CliffordElement::identity(n);
        std::uint32_t start = id.symplectic_key();
        map[start] = {0, start, -1};
        std::deque<std::pair<std::uint32_t, CliffordElement>> queue{{start, id}};
        while (!queue.empty()) {
            auto [key, elem] = queue.front();
            queue.pop_front();
            int d = map[key].dist;
            for (size_t gi = 0; gi < gens.size(); ++gi) {
                CliffordElement next = gens[gi].tableau.compose_after(elem);
                std::uint32_t nk = next.symplectic_key();
                int nd = d + gens[gi].cost;
                auto it = map.find(nk);
                if (it == map.end() || nd < it->second.dist) {
                    map[nk] = {nd, key, static_cast<int>(gi)};
                    if (gens[gi].cost == 0)
                        queue.emplace_front(nk, next);
                    else
                        queue.emplace_back(nk, next);
                }
            }
        }
    }
};

const DecompositionTable& table_for(int n) {
    static const DecompositionTable t1(1);
    static const DecompositionTable t2(2);
    return n == 1 ? t1 : t2;
}

void push_native(std::vector<NativeGate>& out, const std::string& gen, int n) {
    // H = Y90 after Z180; S = virtual Z90
    if (gen == "h0" || gen == "h1") {
        int q = (gen == "h0") ? 0 : 1;
        out.push_back({"z180", q, -1});
        out.push_back({"y90", q, -1});
    } else if (gen == "s0" || gen == "s1") {
        int q = (gen == "s0") ? 0 : 1;
        out.push_back({"z90", q, -1});
    } else if (gen == "cx") {
        out.push_back({"cx", 0, 1});
    } else {
        throw std::logic_error("unknown generator " + gen + std::to_string(n));
    }
}

}  // namespace

std::vector<NativeGate> decompose_clifford(const CliffordElement& c) {
    const auto& table = table_for(c.n);
    std::uint32_t key = c.symplectic_key();
    auto it = table.map.find(key);
    if (it == table.map.end()) throw std::runtime_error("tableau outside the symplectic group");

    // walk predecessors; word comes out last-applied-first
    std::vector<int> word;
    std::uint32_t cur = key;
    std::uint32_t start = CliffordElement::identity(c.n).symplectic_key();
    while (cur != start) {
        const auto& e = table.map.at(cur);
        word.push_back(e.gen);
        cur = e.prev;
    }
    std::vector<NativeGate> gates;
    CliffordElement built = CliffordElement::identity(c.n);
    for (auto gi = word.rbegin(); gi != word.rend(); ++gi) {
        push_native(gates, table.gens[static_cast<size_t>(*gi)].name, c.n);
        built = table.gens[static_cast<size_t>(*gi)].tableau.compose_after(built);
    }
    // residual sign correction: c = (Pauli conj) o built
    CliffordElement residual = c.compose_after(built.inverse());
    unsigned px = 0, pz = 0;
    for (int q = 0; q < c.n; ++q) {
        if (residual.images[q].negative_sign()) pz |= 1u << q;          // flip X_q: needs Z
        if (residual.images[c.n + q].negative_sign()) px |= 1u << q;    // flip Z_q: needs X
    }
    for (int q = 0; q < c.n; ++q) {
        bool bx = (px >> q) & 1, bz = (pz >> q) & 1;
        if (bx && bz) {
            gates.push_back({"y90", q, -1});
            gates.push_back({"y90", q, -1});
        } else if (bx) {
            gates.push_back({"x90", q, -1});
            gates.push_back({"x90", q, -1});
        } else if (bz) {
            gates.push_back({"z180", q, -1});
        }
    }
    return gates;
}

int cx_count(const std::vector<NativeGate>& gates) {
    int c = 0;
    for (const auto& g : gates)
        if (g.name == "cx") ++c;
    return c;
}

namespace {

Mat rot1(char axis, double angle) {
    return matrix_exp_hermitian(0.5 * angle * pauli1(axis), 1.0);
}

Mat embed1(const Mat& g, int q, int n) {
    if (n == 1) return g;
    Mat id = Mat::Identity(2, 2);
    Mat out(4, 4);
    const Mat& a = (q == 0) ? g : id;
    const Mat& b = (q == 0) ? id : g;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) out.block(2 * r, 2 * c, 2, 2) = a(r, c) * b;
    return out;
}

}  // namespace

Mat native_gate_unitary(const NativeGate& g, int n) {
    if (g.name == "cx") {
        Mat u = Mat::Zero(4, 4);
        u(0, 0) = 1;
        u(1, 1) = 1;
        u(2, 3) = 1;
        u(3, 2) = 1;
        return u;
    }
    double angle = 0.0;
    char axis = 'X';
    if (g.name == "x90") angle = kPi / 2, axis = 'X';
    else if (g.name == "xm90") angle = -kPi / 2, axis = 'X';
    else if (g.name == "y90") angle = kPi / 2, axis = 'Y';
    else if (g.name == "ym90") angle = -kPi / 2, axis = 'Y';
    else if (g.name == "z90") angle = kPi / 2, axis = 'Z';
    else if (g.name == "zm90") angle = -kPi / 2, axis = 'Z';
    else if (g.name == "z180") angle = kPi, axis = 'Z';
    else throw std::invalid_argument("unknown native gate " + g.name);
    return embed1(rot1(axis, angle), g.q0, n);
}

Mat unitary_of_gates(const std::vector<NativeGate>& gates, int n) {
    Mat u = Mat::Identity(1 << n, 1 << n);
    for (const auto& g : gates) u = native_gate_unitary(g, n) * u;
    return u;
}

CliffordElement native_gate_tableau(const NativeGate& g, int n) {
    if (g.name == "cx") return cx_tableau();
    CliffordElement c = CliffordElement::identity(n);
    int q = g.q0;
    auto set = [&](PauliOp xi, PauliOp zi) {
        c.images[q] = xi;
        c.images[n + q] = zi;
    };
    unsigned bq = 1u << q;
    auto P = [&](unsigned px, unsigned pz, bool neg) { return PauliOp::from_xz(n, px, pz, neg); };
    if (g.name == "z90") set(P(bq, bq, false), P(0, bq, false));        // X->Y
    else if (g.name == "zm90") set(P(bq, bq, true), P(0, bq, false));   // X->-Y
    else if (g.name == "z180") set(P(bq, 0, true), P(0, bq, false));
    else if (g.name == "x90") set(P(bq, 0, false), P(bq, bq, true));    // Z->-Y
    else if (g.name == "xm90") set(P(bq, 0, false), P(bq, bq, false));
    else if (g.name == "y90") set(P(0, bq, true), P(bq, 0, false));     // X->-Z, Z->X
    else if (g.name == "ym90") set(P(0, bq, false), P(bq, 0, true));
    else throw std::invalid_argument("unknown native gate " + g.name);
    return c;
}

}  // namespace offres
