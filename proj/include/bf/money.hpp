#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "bf/error.hpp"

namespace bf {

// Currency in integer cents. Budget ledgers must balance exactly, so all
// accounting is integral; dollars are a presentation format.
struct Money {
    std::int64_t cents = 0;

    static Money from_cents(std::int64_t c) { return Money{c}; }

    static Money from_dollars(double d) {
        if (!std::isfinite(d)) throw Error::numeric("non-finite currency amount");
        return Money{static_cast<std::int64_t>(std::llround(d * 100.0))};
    }

    double dollars() const { return static_cast<double>(cents) / 100.0; }

    friend Money operator+(Money a, Money b) { return Money{a.cents + b.cents}; }
    friend Money operator-(Money a, Money b) { return Money{a.cents - b.cents}; }
    Money& operator+=(Money o) { cents += o.cents; return *this; }
    Money& operator-=(Money o) { cents -= o.cents; return *this; }
    friend bool operator==(Money a, Money b) { return a.cents == b.cents; }
    friend bool operator!=(Money a, Money b) { return a.cents != b.cents; }
    friend bool operator<(Money a, Money b) { return a.cents < b.cents; }
    friend bool operator<=(Money a, Money b) { return a.cents <= b.cents; }
    friend bool operator>(Money a, Money b) { return a.cents > b.cents; }
    friend bool operator>=(Money a, Money b) { return a.cents >= b.cents; }
};

}  // namespace bf
