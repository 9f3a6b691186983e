#include "gazelab/batch.hpp"

#include "gazelab/errors.hpp"

namespace gazelab {

const char* selection_name(ViewSelection s) {
    switch (s) {
        case ViewSelection::L: return "L";
        case ViewSelection::M: return "M";
        case ViewSelection::R: return "R";
        case ViewSelection::all: return "multi";
    }
    return "?";
}

ViewSelection parse_selection(const std::string& name) {
    if (name == "L") return ViewSelection::L;
    if (name == "M") return ViewSelection::M;
    if (name == "R") return ViewSelection::R;
    if (name == "multi" || name == "all") return ViewSelection::all;
    throw InvalidConfig("unknown view selection '" + name + "' (expected L, M, R or multi)");
}

namespace {

Tensor stack(std::size_t rows, std::size_t cols, auto&& row_of) {
    Tensor out({rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        const std::vector<double>& src = row_of(r);
        if (src.size() != cols) {
            throw ShapeMismatch("feature length " + std::to_string(src.size()) + " vs " + std::to_string(cols));
        }
        std::copy(src.begin(), src.end(), out.ptr() + r * cols);
    }
    return out;
}

}  // namespace

DirectionBatch make_direction_batch(std::span<const synth::DirectionSample> data,
                                    std::span<const std::size_t> indices) {
    if (indices.empty()) throw EmptyDataset("direction batch has no samples");
    const std::size_t b = indices.size();
    const std::size_t dim = data[indices[0]].feat_left.size();
    DirectionBatch out{stack(b, dim, [&](std::size_t r) -> const auto& { return data[indices[r]].feat_left; }),
                       stack(b, dim, [&](std::size_t r) -> const auto& { return data[indices[r]].feat_right; }),
                       Tensor({b, 4}), Tensor({b, 3})};
    for (std::size_t r = 0; r < b; ++r) {
        const auto& s = data[indices[r]];
        out.truth.at(r, 0) = s.truth_l.theta;
        out.truth.at(r, 1) = s.truth_l.phi;
        out.truth.at(r, 2) = s.truth_r.theta;
        out.truth.at(r, 3) = s.truth_r.phi;
        out.v.at(r, 0) = s.v.x;
        out.v.at(r, 1) = s.v.y;
        out.v.at(r, 2) = s.v.z;
    }
    return out;
}

PointBatch make_point_batch(std::span<const synth::PointSample> data, std::span<const std::size_t> indices,
                            ViewSelection views) {
    if (indices.empty()) throw EmptyDataset("point batch has no samples");
    const std::size_t b = indices.size();
    const std::size_t dim = data[indices[0]].feat_view[0].size();
    PointBatch out;
    for (int slot = 0; slot < 3; ++slot) {
        const int source = views == ViewSelection::all ? slot : static_cast<int>(views);
        out.views[slot] = stack(b, dim, [&](std::size_t r) -> const auto& { return data[indices[r]].feat_view[source]; });
    }
    out.truth = Tensor({b, 2});
    for (std::size_t r = 0; r < b; ++r) {
        out.truth.at(r, 0) = data[indices[r]].truth_p.u;
        out.truth.at(r, 1) = data[indices[r]].truth_p.v;
    }
    return out;
}

}  // namespace gazelab
