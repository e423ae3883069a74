#pragma once

// Per-scene enumeration of a trigger-action policy, kept as exact
// fractions. F goes through the harmonic mean of precision and recall
// rather than the count formula.

#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

namespace oracle {

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static Rational of(std::int64_t n, std::int64_t d)
    {
        if (d == 0)
            return {0, 1};
        const auto g = std::gcd(n, d);
        return {n / g, d / g};
    }

    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool operator==(const Rational&) const = default;
};

inline Rational operator*(Rational a, Rational b) { return Rational::of(a.num * b.num, a.den * b.den); }
inline Rational operator+(Rational a, Rational b) { return Rational::of(a.num * b.den + b.num * a.den, a.den * b.den); }
inline Rational operator/(Rational a, Rational b) { return b.num == 0 ? Rational{0, 1} : Rational::of(a.num * b.den, a.den * b.num); }

struct Confusion {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;
    Rational precision;
    Rational recall;
    Rational f;
};

using Trigger = std::map<std::string, std::set<std::string>>;

inline bool fires(const Trigger& trigger, const std::map<std::string, std::string>& scene)
{
    for (const auto& [factor, allowed] : trigger)
        if (!allowed.contains(scene.at(factor)))
            return false;
    return true;
}

inline Confusion enumerate(const Trigger& trigger,
                           const std::string& action_factor,
                           const std::string& action_instance,
                           const std::vector<std::map<std::string, std::string>>& scenes)
{
    Confusion c;
    for (const auto& scene : scenes) {
        const bool predicted = fires(trigger, scene);
        const bool actual = scene.at(action_factor) == action_instance;
        if (predicted && actual)
            ++c.tp;
        else if (predicted)
            ++c.fp;
        else if (actual)
            ++c.fn;
        else
            ++c.tn;
    }
    c.precision = Rational::of(c.tp, c.tp + c.fp);
    c.recall = Rational::of(c.tp, c.tp + c.fn);
    const Rational two{2, 1};
    c.f = (c.precision.num == 0 || c.recall.num == 0)
        ? Rational{0, 1}
        : two * c.precision * c.recall / (c.precision + c.recall);
    return c;
}

} // namespace oracle
