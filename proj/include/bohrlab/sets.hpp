#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bohrlab/errors.hpp"
#include "bohrlab/group.hpp"
#include "bohrlab/rng.hpp"

namespace bohrlab {

// Subset of a group, stored as a bitmap over flat element indices.
class ElementSet {
public:
    ElementSet() = default;
    explicit ElementSet(Group g)
        : group_(std::move(g)),
          bits_(static_cast<std::size_t>((group_.size() + 63) / 64), 0),
          count_(0) {}

    static ElementSet full(const Group& g) {
        ElementSet s(g);
        for (std::int64_t i = 0; i < g.size(); ++i) s.add(i);
        return s;
    }

    // Bernoulli(density) sample over all of G.
    static ElementSet random(const Group& g, double density, Rng& rng) {
        ElementSet s(g);
        for (std::int64_t i = 0; i < g.size(); ++i)
            if (rng.next_double() < density) s.add(i);
        return s;
    }

    const Group& group() const { return group_; }
    std::int64_t size() const { return count_; }
    bool empty() const { return count_ == 0; }
    double density() const {
        return static_cast<double>(count_) / static_cast<double>(group_.size());
    }

    bool contains(std::int64_t idx) const {
        return (bits_[static_cast<std::size_t>(idx >> 6)] >> (idx & 63)) & 1;
    }

    void add(std::int64_t idx) {
        std::uint64_t& w = bits_[static_cast<std::size_t>(idx >> 6)];
        std::uint64_t m = 1ULL << (idx & 63);
        if (!(w & m)) { w |= m; ++count_; }
    }

    void remove(std::int64_t idx) {
        std::uint64_t& w = bits_[static_cast<std::size_t>(idx >> 6)];
        std::uint64_t m = 1ULL << (idx & 63);
        if (w & m) { w &= ~m; --count_; }
    }

    // Smallest member index, or -1 when empty.  Used as the deterministic
    // tie-break whenever "pick any element" appears in a procedure.
    std::int64_t first() const {
        for (std::size_t w = 0; w < bits_.size(); ++w)
            if (bits_[w]) {
                unsigned b = static_cast<unsigned>(__builtin_ctzll(bits_[w]));
                return static_cast<std::int64_t>(w * 64 + b);
            }
        return -1;
    }

    std::vector<std::int64_t> elements() const {
        std::vector<std::int64_t> out;
        out.reserve(static_cast<std::size_t>(count_));
        for (std::size_t w = 0; w < bits_.size(); ++w) {
            std::uint64_t word = bits_[w];
            while (word) {
                unsigned b = static_cast<unsigned>(__builtin_ctzll(word));
                out.push_back(static_cast<std::int64_t>(w * 64 + b));
                word &= word - 1;
            }
        }
        return out;
    }

    ElementSet negate() const {
        ElementSet out(group_);
        for (std::int64_t x : elements()) out.add(group_.neg(x));
        return out;
    }

    ElementSet translate(std::int64_t t) const {
        ElementSet out(group_);
        for (std::int64_t x : elements()) out.add(group_.add(t, x));
        return out;
    }

    // {k.x : x in A}
    ElementSet scaled(std::int64_t k) const {
        ElementSet out(group_);
        for (std::int64_t x : elements()) out.add(group_.scale(k, x));
        return out;
    }

    ElementSet intersect(const ElementSet& other) const {
        require_same_group(other);
        ElementSet out(group_);
        for (std::size_t w = 0; w < bits_.size(); ++w) out.bits_[w] = bits_[w] & other.bits_[w];
        out.recount();
        return out;
    }

    ElementSet unite(const ElementSet& other) const {
        require_same_group(other);
        ElementSet out(group_);
        for (std::size_t w = 0; w < bits_.size(); ++w) out.bits_[w] = bits_[w] | other.bits_[w];
        out.recount();
        return out;
    }

    ElementSet difference(const ElementSet& other) const {
        require_same_group(other);
        ElementSet out(group_);
        for (std::size_t w = 0; w < bits_.size(); ++w) out.bits_[w] = bits_[w] & ~other.bits_[w];
        out.recount();
        return out;
    }

    bool subset_of(const ElementSet& other) const {
        require_same_group(other);
        for (std::size_t w = 0; w < bits_.size(); ++w)
            if (bits_[w] & ~other.bits_[w]) return false;
        return true;
    }

    bool operator==(const ElementSet& other) const {
        return group_ == other.group_ && bits_ == other.bits_;
    }

    std::int64_t intersection_size(const ElementSet& other) const {
        require_same_group(other);
        std::int64_t n = 0;
        for (std::size_t w = 0; w < bits_.size(); ++w)
            n += __builtin_popcountll(bits_[w] & other.bits_[w]);
        return n;
    }

    // ---- serialization ----

    // Text form: one element per line, coordinates separated by commas or
    // spaces; '#' comments and blank lines ignored.
    void write_lines(std::ostream& os) const {
        for (std::int64_t x : elements()) {
            auto c = group_.coords_of(x);
            for (std::size_t j = 0; j < c.size(); ++j) {
                if (j) os << ',';
                os << c[j];
            }
            os << '\n';
        }
    }

    static ElementSet read_lines(const Group& g, std::istream& is) {
        ElementSet s(g);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            for (char& c : line)
                if (c == ',') c = ' ';
            std::istringstream ls(line);
            std::vector<std::int64_t> coords;
            std::int64_t v;
            while (ls >> v) coords.push_back(v);
            if (coords.empty()) continue;
            if (coords.size() != g.num_factors())
                throw BadInput("set file line " + std::to_string(lineno) + ": expected " +
                               std::to_string(g.num_factors()) + " coordinates, got " +
                               std::to_string(coords.size()));
            s.add(g.index_of(coords));
        }
        return s;
    }

    // Binary form: "BLAB", version byte 1, factor count and factor orders as
    // little-endian u64, then ceil(size/8) bytes of bitmap in element order
    // (bit i of byte k is element 8k+i).
    void write_blab(std::ostream& os) const {
        os.write("BLAB", 4);
        char version = 1;
        os.write(&version, 1);
        auto put_u64 = [&](std::uint64_t v) {
            char b[8];
            for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
            os.write(b, 8);
        };
        put_u64(group_.num_factors());
        for (std::int64_t n : group_.orders()) put_u64(static_cast<std::uint64_t>(n));
        std::int64_t nbytes = (group_.size() + 7) / 8;
        for (std::int64_t k = 0; k < nbytes; ++k) {
            unsigned char byte = 0;
            for (int i = 0; i < 8; ++i) {
                std::int64_t idx = 8 * k + i;
                if (idx < group_.size() && contains(idx)) byte |= static_cast<unsigned char>(1u << i);
            }
            os.put(static_cast<char>(byte));
        }
    }

    static ElementSet read_blab(std::istream& is, std::int64_t size_cap = Group::kDefaultSizeCap) {
        char magic[4];
        is.read(magic, 4);
        if (!is || std::memcmp(magic, "BLAB", 4) != 0)
            throw BadInput("bitmap file: bad magic");
        char version;
        is.read(&version, 1);
        if (!is || version != 1)
            throw BadInput("bitmap file: unsupported version");
        auto get_u64 = [&]() -> std::uint64_t {
            unsigned char b[8];
            is.read(reinterpret_cast<char*>(b), 8);
            if (!is) throw BadInput("bitmap file: truncated header");
            std::uint64_t v = 0;
            for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
            return v;
        };
        std::uint64_t nf = get_u64();
        if (nf > 64) throw BadInput("bitmap file: implausible factor count");
        std::vector<std::int64_t> orders;
        for (std::uint64_t j = 0; j < nf; ++j) orders.push_back(static_cast<std::int64_t>(get_u64()));
        Group g = Group::product(std::move(orders), size_cap);
        ElementSet s(g);
        std::int64_t nbytes = (g.size() + 7) / 8;
        for (std::int64_t k = 0; k < nbytes; ++k) {
            int byte = is.get();
            if (byte < 0) throw BadInput("bitmap file: truncated bitmap");
            for (int i = 0; i < 8; ++i) {
                std::int64_t idx = 8 * k + i;
                if (idx < g.size() && (byte & (1 << i))) s.add(idx);
            }
        }
        return s;
    }

    // Loads either format, sniffing the magic.  For the text form the group
    // must be supplied; for BLAB it is read from the header and checked
    // against `g` when given.
    static ElementSet load(const std::string& path, const Group* g = nullptr,
                           std::int64_t size_cap = Group::kDefaultSizeCap) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw BadInput("cannot open set file: " + path);
        char magic[4] = {0, 0, 0, 0};
        is.read(magic, 4);
        is.clear();
        is.seekg(0);
        if (std::memcmp(magic, "BLAB", 4) == 0) {
            ElementSet s = read_blab(is, size_cap);
            if (g && s.group() != *g)
                throw BadInput("set file group " + s.group().str() + " does not match " + g->str());
            return s;
        }
        if (!g) throw BadInput("text set file needs an explicit group: " + path);
        return read_lines(*g, is);
    }

    void save(const std::string& path, bool binary = false) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw BadInput("cannot open for writing: " + path);
        if (binary) write_blab(os);
        else write_lines(os);
    }

private:
    void require_same_group(const ElementSet& other) const {
        if (group_ != other.group_)
            throw BadInput("set operation across different groups: " + group_.str() +
                           " vs " + other.group_.str());
    }

    void recount() {
        count_ = 0;
        for (std::uint64_t w : bits_) count_ += __builtin_popcountll(w);
    }

    Group group_;
    std::vector<std::uint64_t> bits_;
    std::int64_t count_ = 0;
};

// {a + b : a in A, b in B}, brute force.
inline ElementSet sumset(const ElementSet& a, const ElementSet& b) {
    if (a.group() != b.group()) throw BadInput("sumset across different groups");
    ElementSet out(a.group());
    auto bs = b.elements();
    for (std::int64_t x : a.elements())
        for (std::int64_t y : bs) out.add(a.group().add(x, y));
    return out;
}

} // namespace bohrlab
