#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmemsim {

// How a state vector's basis index j maps onto physical subsystems: a register
// of qubits (binary digits of j), one d-level qudit (j itself), or an array of
// equal-size qudits (digits of j in radix d_each). The index mapping is the
// identity on [0, dim) in all three cases; only the digit interpretation and
// the associated excitation count differ.
class Layout {
public:
    enum class Kind { QubitRegister, SingleQudit, QuditArray };

    static Layout qubit_register(int n_q, bool dephasing = true) {
        if (n_q < 1) throw std::invalid_argument("qubit register needs n_q >= 1");
        if (n_q > 30) throw std::invalid_argument("qubit register too large");
        Layout l;
        l.kind_ = Kind::QubitRegister;
        l.sites_ = n_q;
        l.local_dim_ = 2;
        l.dephasing_ = dephasing;
        return l;
    }

    static Layout single_qudit(std::int64_t d) {
        if (d < 2) throw std::invalid_argument("qudit needs d >= 2");
        Layout l;
        l.kind_ = Kind::SingleQudit;
        l.sites_ = 1;
        l.local_dim_ = d;
        return l;
    }

    static Layout qudit_array(int count, std::int64_t d_each) {
        if (count < 1 || d_each < 2) throw std::invalid_argument("qudit array needs count >= 1, d >= 2");
        Layout l;
        l.kind_ = Kind::QuditArray;
        l.sites_ = count;
        l.local_dim_ = d_each;
        return l;
    }

    Kind kind() const { return kind_; }
    int sites() const { return sites_; }
    std::int64_t local_dim() const { return local_dim_; }
    bool dephasing() const { return dephasing_; }

    std::int64_t dim() const {
        std::int64_t d = 1;
        for (int i = 0; i < sites_; ++i) {
            if (d > (std::int64_t{1} << 62) / local_dim_)
                throw std::overflow_error("layout dimension overflow");
            d *= local_dim_;
        }
        return d;
    }

    // digit of basis index j at the given site (site 0 is the least significant)
    std::int64_t digit(std::int64_t j, int site) const {
        std::int64_t v = j;
        for (int s = 0; s < site; ++s) v /= local_dim_;
        return v % local_dim_;
    }

    // total excitation number of basis index j under this layout:
    // Hamming weight for qubit registers, j for a single qudit, radix digit sum
    // for qudit arrays
    std::int64_t excitation(std::int64_t j) const {
        if (kind_ == Kind::SingleQudit) return j;
        if (kind_ == Kind::QubitRegister) return std::int64_t(__builtin_popcountll(static_cast<unsigned long long>(j)));
        std::int64_t sum = 0, v = j;
        while (v > 0) {
            sum += v % local_dim_;
            v /= local_dim_;
        }
        return sum;
    }

    // NH decay rate of basis index j for this layout's canonical noise model
    // (amplitude damping everywhere, dephasing only where enabled), at rate gamma:
    // qubit register with dephasing -> gamma*w(j); without -> gamma*w(j)/2;
    // qudits -> gamma*excitation(j)/2.
    double nh_rate(std::int64_t j, double gamma = 1.0) const {
        const double exc = static_cast<double>(excitation(j));
        if (kind_ == Kind::QubitRegister && dephasing_) return gamma * exc;
        return 0.5 * gamma * exc;
    }

    std::string describe() const {
        switch (kind_) {
            case Kind::QubitRegister:
                return "qubit:" + std::to_string(sites_) + (dephasing_ ? "" : ":nodeph");
            case Kind::SingleQudit:
                return "qudit:" + std::to_string(local_dim_);
            case Kind::QuditArray:
                return "quditarray:" + std::to_string(sites_) + ":" + std::to_string(local_dim_);
        }
        return "?";
    }

private:
    Kind kind_ = Kind::SingleQudit;
    int sites_ = 1;
    std::int64_t local_dim_ = 2;
    bool dephasing_ = false;
};

} // namespace qmemsim
