#include "sqlgov/vector_math.hpp"

#include <cmath>
#include <string>

#include "sqlgov/error.hpp"

namespace sqlgov {

namespace {

void check_dims(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DIMENSION_MISMATCH,
                    "vectors of dimension " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
}

}  // namespace

double dot(const Vector& a, const Vector& b) {
    check_dims(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double l2_norm(const Vector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double cosine_similarity(const Vector& a, const Vector& b) {
    check_dims(a, b);
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZERO_VECTOR, "cosine similarity of a zero vector");
    const double c = dot(a, b) / (na * nb);
    return std::fmax(-1.0, std::fmin(1.0, c));
}

double euclidean_distance(const Vector& a, const Vector& b) {
    check_dims(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

Vector normalized(Vector v) {
    const double n = l2_norm(v);
    if (n == 0.0) throw Error(ErrorCode::ZERO_VECTOR, "cannot normalize a zero vector");
    for (double& x : v) x /= n;
    return v;
}

}  // namespace sqlgov
