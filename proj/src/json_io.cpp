#include "relflow/json_io.hpp"
#include "relflow/errors.hpp"

#include <algorithm>
#include <cstdio>

namespace relflow {

namespace {

Json vec_to_json(const Vec& v) {
    Json a = Json::array();
    for (int i = 0; i < v.size(); ++i)
        a.push_back(v[i]);
    return a;
}

Vec vec_from_json(const Json& j) {
    if (!j.is_array())
        throw ValidationError("expected an array of numbers");
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<int>(i)] = j[i].get<double>();
    return v;
}

Json mat_to_json(const Mat& m) {
    Json rows = Json::array();
    for (int i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (int j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

Mat mat_from_json(const Json& j) {
    if (!j.is_array() || j.empty())
        throw ValidationError("expected a matrix as an array of rows");
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].size();
    Mat m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (j[i].size() != cols)
            throw ValidationError("ragged matrix rows");
        for (std::size_t k = 0; k < cols; ++k)
            m(static_cast<int>(i), static_cast<int>(k)) = j[i][k].get<double>();
    }
    return m;
}

} // namespace

void require_keys(const Json& j, const std::vector<std::string>& allowed,
                  const std::string& context) {
    if (!j.is_object())
        throw ValidationError(context + ": expected an object");
    for (const auto& item : j.items())
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
            throw ValidationError(context + ": unknown field '" + item.key() + "'");
}

Json schedule_to_json(const ControlSchedule& s) {
    Json segs = Json::array();
    for (const ControlSegment& seg : s.segments) {
        segs.push_back(Json{{"t0", seg.t_start},
                            {"t1", seg.t_end},
                            {"w", vec_to_json(seg.w)},
                            {"a", vec_to_json(seg.a)},
                            {"b", seg.b}});
    }
    return Json{{"horizon", s.horizon}, {"segments", segs}};
}

ControlSchedule schedule_from_json(const Json& j) {
    require_keys(j, {"horizon", "segments"}, "schedule");
    ControlSchedule s;
    s.horizon = j.at("horizon").get<double>();
    for (const Json& seg : j.at("segments")) {
        require_keys(seg, {"t0", "t1", "w", "a", "b"}, "schedule.segment");
        ControlSegment cs;
        cs.t_start = seg.at("t0").get<double>();
        cs.t_end = seg.at("t1").get<double>();
        cs.w = vec_from_json(seg.at("w"));
        cs.a = vec_from_json(seg.at("a"));
        cs.b = seg.at("b").get<double>();
        s.segments.push_back(std::move(cs));
    }
    s.validate();
    return s;
}

Json grid_to_json(const GridDensity& g) {
    Json shape = Json::array();
    for (int k = 0; k < g.dim; ++k)
        shape.push_back(g.cells_per_axis());
    return Json{{"R", g.radius}, {"h", g.spacing}, {"shape", shape}, {"values", g.values}};
}

GridDensity grid_from_json(const Json& j) {
    require_keys(j, {"R", "h", "shape", "values"}, "grid");
    GridDensity g;
    g.radius = j.at("R").get<double>();
    g.spacing = j.at("h").get<double>();
    g.dim = static_cast<int>(j.at("shape").size());
    g.values = j.at("values").get<std::vector<double>>();
    std::size_t expected = 1;
    for (const Json& s : j.at("shape"))
        expected *= s.get<std::size_t>();
    if (expected != g.values.size())
        throw ValidationError("grid values do not match the declared shape");
    return g;
}

Json matching_plan_to_json(const MatchingPlan& p) {
    Json segs = Json::array();
    for (const LinearSegment& seg : p.segments) {
        segs.push_back(Json{{"t0", seg.t_start},
                            {"t1", seg.t_end},
                            {"w", mat_to_json(seg.w)},
                            {"b", vec_to_json(seg.b)}});
    }
    Json constants{{"beta1", p.constants.beta1},
                   {"beta2", p.constants.beta2},
                   {"alpha1", p.constants.alpha1},
                   {"alpha2", p.constants.alpha2},
                   {"alpha3", p.constants.alpha3},
                   {"alpha4", p.constants.alpha4}};
    if (p.constants.offset.size() > 0)
        constants["c"] = vec_to_json(p.constants.offset);
    return Json{{"horizon", p.horizon},
                {"segments", segs},
                {"relabeling", p.relabeling},
                {"constants", constants}};
}

MatchingPlan matching_plan_from_json(const Json& j) {
    require_keys(j, {"horizon", "segments", "relabeling", "constants"}, "plan");
    MatchingPlan p;
    p.horizon = j.at("horizon").get<double>();
    for (const Json& seg : j.at("segments")) {
        require_keys(seg, {"t0", "t1", "w", "b"}, "plan.segment");
        LinearSegment ls;
        ls.t_start = seg.at("t0").get<double>();
        ls.t_end = seg.at("t1").get<double>();
        ls.w = mat_from_json(seg.at("w"));
        ls.b = vec_from_json(seg.at("b"));
        p.segments.push_back(std::move(ls));
    }
    if (j.contains("relabeling"))
        p.relabeling = j.at("relabeling").get<std::vector<int>>();
    return p;
}

Json synthesis_report_to_json(const SynthesisReport& r) {
    return Json{{"objective", r.objective == Objective::kl ? "kl" : "reverse_kl"},
                {"horizon", r.horizon},
                {"epsilon", r.epsilon_request},
                {"eps_tv_used", r.eps_tv_used},
                {"tv_achieved", r.tv_achieved},
                {"kl_achieved", r.kl_achieved},
                {"sup_ratio", r.sup_ratio},
                {"reverse_pinsker_bound", r.reverse_pinsker_bound},
                {"interior_gap", r.interior_gap},
                {"outer_mass_solution", r.outer_mass_solution},
                {"outer_mass_target", r.outer_mass_target},
                {"switch_count", r.switch_count},
                {"within_tolerance", r.within_tolerance},
                {"tail_plan",
                 Json{{"sigma_env", r.tail_plan.sigma_env},
                      {"alpha", r.tail_plan.alpha},
                      {"omega", r.tail_plan.omega},
                      {"M_bar", r.tail_plan.M_bar},
                      {"M_bar_bar", r.tail_plan.M_bar_bar},
                      {"direction", r.tail_plan.direction == TailDirection::dominate_target
                                        ? "dominate_target"
                                        : "dominated_by_target"}}},
                {"schedule", schedule_to_json(r.schedule)}};
}

std::string synthesis_report_csv_header() {
    return "objective,horizon,epsilon,eps_tv_used,tv_achieved,kl_achieved,sup_ratio,"
           "reverse_pinsker_bound,switch_count,sigma_env,omega,M_bar,M_bar_bar,"
           "within_tolerance";
}

std::string synthesis_report_csv_row(const SynthesisReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%.17g,%.17g,%.17g,%d",
                  r.objective == Objective::kl ? "kl" : "reverse_kl", r.horizon,
                  r.epsilon_request, r.eps_tv_used, r.tv_achieved, r.kl_achieved, r.sup_ratio,
                  r.reverse_pinsker_bound, r.switch_count, r.tail_plan.sigma_env,
                  r.tail_plan.omega, r.tail_plan.M_bar, r.tail_plan.M_bar_bar,
                  r.within_tolerance ? 1 : 0);
    return std::string(buf);
}

} // namespace relflow
