#pragma once

#include <vector>

namespace sqlgov {

using Vector = std::vector<double>;

double dot(const Vector& a, const Vector& b);
double l2_norm(const Vector& v);

/// a·b / (|a||b|). Throws DIMENSION_MISMATCH or ZERO_VECTOR.
double cosine_similarity(const Vector& a, const Vector& b);

double euclidean_distance(const Vector& a, const Vector& b);

/// Unit vector in the direction of v. Throws ZERO_VECTOR.
Vector normalized(Vector v);

}  // namespace sqlgov
