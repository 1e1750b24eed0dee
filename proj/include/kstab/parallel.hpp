#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace kstab {

// Worker count hint. Work is split into fixed chunks and every reduction is
// done sequentially afterwards, so results do not depend on this value.
void set_threads(int n);
int threads();

void parallel_for(size_t n, const std::function<void(size_t)>& fn);

// Neumaier compensated sum, always accumulated in index order.
class Accumulator {
public:
    void add(double x)
    {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0, comp_ = 0;
};

inline double ordered_sum(const std::vector<double>& v)
{
    Accumulator acc;
    for (double x : v) acc.add(x);
    return acc.value();
}

}  // namespace kstab
