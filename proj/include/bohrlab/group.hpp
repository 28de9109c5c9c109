#pragma once

#include <cctype>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "bohrlab/errors.hpp"

namespace bohrlab {

// Extended Euclid.  Returns g = gcd(a, b) and x with a*x ≡ g (mod b).
inline std::int64_t ext_gcd(std::int64_t a, std::int64_t b, std::int64_t& x) {
    std::int64_t x0 = 1, x1 = 0, r0 = a, r1 = b;
    while (r1 != 0) {
        std::int64_t q = r0 / r1;
        std::int64_t t = r0 - q * r1; r0 = r1; r1 = t;
        t = x0 - q * x1; x0 = x1; x1 = t;
    }
    x = x0;
    return r0;
}

// Inverse of k mod n; throws if gcd(k, n) != 1.
inline std::int64_t inv_mod(std::int64_t k, std::int64_t n) {
    if (n == 1) return 0;
    std::int64_t kk = ((k % n) + n) % n;
    std::int64_t x = 0;
    std::int64_t g = ext_gcd(kk, n, x);
    if (g != 1)
        throw BadInput("inv_mod: " + std::to_string(k) + " is not invertible mod " + std::to_string(n));
    return ((x % n) + n) % n;
}

// A finite abelian group presented as Z/n_1 x ... x Z/n_k.  Elements and
// characters are both stored as flat indices in [0, size); coordinate j of
// index i is (i / stride_j) % n_j with lexicographic strides.  The dual
// group is identified with the group itself: character gamma pairs with x
// through the phase sum(gamma_j * x_j / n_j) mod 1.
class Group {
public:
    static constexpr std::int64_t kDefaultSizeCap = std::int64_t{1} << 20;

    Group() : size_(1) {}

    static Group product(std::vector<std::int64_t> orders,
                         std::int64_t size_cap = kDefaultSizeCap) {
        Group g;
        g.orders_ = std::move(orders);
        g.size_ = 1;
        for (std::int64_t n : g.orders_) {
            if (n < 1) throw BadInput("group factor order must be >= 1");
            if (n > size_cap || g.size_ > size_cap / n)
                throw SizeCapExceeded("group order exceeds cap " + std::to_string(size_cap));
            g.size_ *= n;
        }
        g.strides_.assign(g.orders_.size(), 1);
        for (int j = static_cast<int>(g.orders_.size()) - 2; j >= 0; --j)
            g.strides_[static_cast<std::size_t>(j)] =
                g.strides_[static_cast<std::size_t>(j) + 1] * g.orders_[static_cast<std::size_t>(j) + 1];
        return g;
    }

    // Grammar: "Z9", "Z3^4", "Z4xZ9", "Z10^2xZ7".  Case-insensitive 'Z'/'x'.
    static Group parse(const std::string& spec, std::int64_t size_cap = kDefaultSizeCap) {
        std::vector<std::int64_t> orders;
        std::size_t i = 0;
        auto skip_ws = [&] { while (i < spec.size() && std::isspace(static_cast<unsigned char>(spec[i]))) ++i; };
        auto read_int = [&]() -> std::int64_t {
            std::size_t start = i;
            while (i < spec.size() && std::isdigit(static_cast<unsigned char>(spec[i]))) ++i;
            if (i == start) throw BadInput("group spec: expected integer at position " + std::to_string(start) + " in '" + spec + "'");
            if (i - start > 18) throw BadInput("group spec: integer too large in '" + spec + "'");
            return std::stoll(spec.substr(start, i - start));
        };
        skip_ws();
        while (true) {
            if (i >= spec.size() || (spec[i] != 'Z' && spec[i] != 'z'))
                throw BadInput("group spec: expected 'Z' in '" + spec + "'");
            ++i;
            std::int64_t n = read_int();
            std::int64_t pow = 1;
            if (i < spec.size() && spec[i] == '^') {
                ++i;
                pow = read_int();
                if (pow < 1 || pow > 64) throw BadInput("group spec: bad exponent in '" + spec + "'");
            }
            for (std::int64_t r = 0; r < pow; ++r) orders.push_back(n);
            skip_ws();
            if (i == spec.size()) break;
            if (spec[i] != 'x' && spec[i] != 'X')
                throw BadInput("group spec: expected 'x' separator in '" + spec + "'");
            ++i;
            skip_ws();
        }
        if (orders.empty()) throw BadInput("group spec: empty");
        return product(std::move(orders), size_cap);
    }

    std::string str() const {
        if (orders_.empty()) return "Z1";
        std::string out;
        std::size_t j = 0;
        while (j < orders_.size()) {
            std::size_t run = j;
            while (run < orders_.size() && orders_[run] == orders_[j]) ++run;
            if (!out.empty()) out += "x";
            out += "Z" + std::to_string(orders_[j]);
            if (run - j > 1) out += "^" + std::to_string(run - j);
            j = run;
        }
        return out;
    }

    std::int64_t size() const { return size_; }
    std::size_t num_factors() const { return orders_.size(); }
    const std::vector<std::int64_t>& orders() const { return orders_; }

    bool operator==(const Group& o) const { return orders_ == o.orders_; }
    bool operator!=(const Group& o) const { return !(*this == o); }

    bool odd_order() const {
        for (std::int64_t n : orders_)
            if (n % 2 == 0) return false;
        return true;
    }

    std::int64_t coord(std::int64_t idx, std::size_t j) const {
        return (idx / strides_[j]) % orders_[j];
    }

    std::vector<std::int64_t> coords_of(std::int64_t idx) const {
        std::vector<std::int64_t> c(orders_.size());
        for (std::size_t j = 0; j < orders_.size(); ++j) c[j] = coord(idx, j);
        return c;
    }

    std::int64_t index_of(std::span<const std::int64_t> coords) const {
        if (coords.size() != orders_.size())
            throw BadInput("coordinate arity mismatch: got " + std::to_string(coords.size()) +
                           ", group has " + std::to_string(orders_.size()) + " factors");
        std::int64_t idx = 0;
        for (std::size_t j = 0; j < orders_.size(); ++j) {
            std::int64_t c = coords[j] % orders_[j];
            if (c < 0) c += orders_[j];
            idx += c * strides_[j];
        }
        return idx;
    }

    std::int64_t add(std::int64_t a, std::int64_t b) const {
        std::int64_t idx = 0;
        for (std::size_t j = 0; j < orders_.size(); ++j) {
            std::int64_t c = (coord(a, j) + coord(b, j)) % orders_[j];
            idx += c * strides_[j];
        }
        return idx;
    }

    std::int64_t neg(std::int64_t a) const {
        std::int64_t idx = 0;
        for (std::size_t j = 0; j < orders_.size(); ++j) {
            std::int64_t c = (orders_[j] - coord(a, j)) % orders_[j];
            idx += c * strides_[j];
        }
        return idx;
    }

    std::int64_t sub(std::int64_t a, std::int64_t b) const { return add(a, neg(b)); }

    std::int64_t scale(std::int64_t k, std::int64_t a) const {
        std::int64_t idx = 0;
        for (std::size_t j = 0; j < orders_.size(); ++j) {
            std::int64_t kj = ((k % orders_[j]) + orders_[j]) % orders_[j];
            std::int64_t c = (kj * coord(a, j)) % orders_[j];
            idx += c * strides_[j];
        }
        return idx;
    }

    // Phase of the pairing <gamma, x> as a fraction of a full turn, in [0, 1).
    double phase(std::int64_t gamma, std::int64_t x) const {
        double theta = 0.0;
        for (std::size_t j = 0; j < orders_.size(); ++j) {
            std::int64_t t = (coord(gamma, j) * coord(x, j)) % orders_[j];
            theta += static_cast<double>(t) / static_cast<double>(orders_[j]);
        }
        theta -= static_cast<double>(static_cast<std::int64_t>(theta));
        return theta;
    }

private:
    std::vector<std::int64_t> orders_;
    std::vector<std::int64_t> strides_;
    std::int64_t size_ = 1;
};

} // namespace bohrlab
