// Compensated floating-point accumulation: error-free transforms (two_sum,
// two_prod), a small double-double type for accumulating sums of squares
// without catastrophic cancellation, and a Neumaier running sum.
//
// The metric identities in core.hpp are required to hold to 1e-9 absolute
// for crowds of 10^4 values of magnitude up to 1e6, i.e. against sums of
// squares of order 1e16. Plain double accumulation carries eps*|sum| ~ 1e0
// of error there; the double-double accumulator keeps it below 1e-15.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace metawise {

struct TwoSum {
    double value;
    double error;
};

// Knuth's branch-free error-free addition: value + error == a + b exactly.
inline TwoSum two_sum(double a, double b) {
    const double s = a + b;
    const double bb = s - a;
    const double err = (a - (s - bb)) + (b - bb);
    return {s, err};
}

// Error-free product via fused multiply-add.
inline TwoSum two_prod(double a, double b) {
    const double p = a * b;
    return {p, std::fma(a, b, -p)};
}

// Unevaluated sum of two doubles, |lo| <= ulp(hi)/2 once normalized.
struct DoubleDouble {
    double hi = 0.0;
    double lo = 0.0;

    static DoubleDouble of(double x) { return {x, 0.0}; }

    double value() const { return hi + lo; }

    DoubleDouble& operator+=(double x) {
        const TwoSum s = two_sum(hi, x);
        double low = lo + s.error;
        const TwoSum r = two_sum(s.value, low);
        hi = r.value;
        lo = r.error;
        return *this;
    }

    DoubleDouble& operator+=(const DoubleDouble& other) {
        TwoSum s = two_sum(hi, other.hi);
        double low = lo + other.lo + s.error;
        const TwoSum r = two_sum(s.value, low);
        hi = r.value;
        lo = r.error;
        return *this;
    }

    DoubleDouble operator-() const { return {-hi, -lo}; }
};

inline DoubleDouble dd_add(DoubleDouble a, const DoubleDouble& b) {
    a += b;
    return a;
}

inline DoubleDouble dd_sub(DoubleDouble a, const DoubleDouble& b) {
    a += -b;
    return a;
}

// (a.hi + a.lo) - x, exact to double-double precision.
inline DoubleDouble dd_sub(DoubleDouble a, double x) {
    a += -x;
    return a;
}

inline DoubleDouble dd_mul(const DoubleDouble& a, const DoubleDouble& b) {
    TwoSum p = two_prod(a.hi, b.hi);
    const double low = p.error + a.hi * b.lo + a.lo * b.hi;
    const TwoSum r = two_sum(p.value, low);
    return {r.value, r.error};
}

inline DoubleDouble dd_sq(const DoubleDouble& a) { return dd_mul(a, a); }

inline DoubleDouble dd_div(const DoubleDouble& a, double d) {
    const double q1 = a.hi / d;
    const TwoSum p = two_prod(q1, d);
    const double r = (a.hi - p.value) - p.error + a.lo;
    const double q2 = r / d;
    const TwoSum s = two_sum(q1, q2);
    return {s.value, s.error};
}

// Neumaier-compensated running sum; cheaper than DoubleDouble, accurate to
// ~2 eps relative for same-signed terms. Good enough wherever cancellation
// of separately accumulated sums is not involved.
class CompensatedSum {
public:
    void add(double x) {
        const TwoSum s = two_sum(sum_, x);
        sum_ = s.value;
        comp_ += s.error;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
    CompensatedSum acc;
    for (double x : xs) acc.add(x);
    return acc.value();
}

}  // namespace metawise
