#include "sst/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace sst {
namespace {

// RFC 4180 row reader: quoted fields, embedded commas/newlines, "" escapes.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false, any = false;
    int ch;
    while ((ch = in.get()) != EOF) {
        any = true;
        char c = static_cast<char>(ch);
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\r') {
            // swallow; \n terminates
        } else if (c == '\n') {
            fields.push_back(std::move(field));
            return true;
        } else {
            field.push_back(c);
        }
    }
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool is_missing(const std::string& s) {
    std::string t = lower(s);
    // trim whitespace
    auto b = t.find_first_not_of(" \t");
    if (b == std::string::npos) return true;
    auto e = t.find_last_not_of(" \t");
    t = t.substr(b, e - b + 1);
    return t.empty() || t == "na" || t == "nan";
}

double parse_double(const std::string& s, std::size_t row, const std::string& col) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ParseError("row " + std::to_string(row) + ", column '" + col +
                         "': cannot parse '" + s + "'");
    }
}

} // namespace

SurvivalDataset SurvivalDataset::subset(const std::vector<std::size_t>& idx) const {
    SurvivalDataset out;
    out.feature_names = feature_names;
    out.features.reserve(idx.size());
    for (std::size_t i : idx) {
        out.features.push_back(features[i]);
        out.times.push_back(times[i]);
        out.events.push_back(events[i]);
        if (has_group()) out.group.push_back(group[i]);
    }
    return out;
}

SurvivalDataset load_csv(const std::string& path, const std::string& time_col,
                         const std::string& event_col, const std::string& group_col) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);

    std::vector<std::string> header;
    if (!read_record(in, header)) throw Error("empty CSV: " + path);

    auto find_col = [&](const std::string& name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw MissingColumn("column '" + name + "' not found in " + path);
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t ti = find_col(time_col);
    const std::size_t ei = find_col(event_col);
    std::optional<std::size_t> gi;
    if (!group_col.empty()) gi = find_col(group_col);

    SurvivalDataset ds;
    std::vector<std::size_t> feat_cols;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j == ti || j == ei || (gi && j == *gi)) continue;
        feat_cols.push_back(j);
        ds.feature_names.push_back(header[j]);
    }

    std::vector<std::string> fields;
    std::size_t row = 1;
    while (read_record(in, fields)) {
        ++row;
        if (fields.size() == 1 && fields[0].empty()) continue;  // trailing newline
        if (fields.size() != header.size())
            throw ParseError("row " + std::to_string(row) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        const double t = parse_double(fields[ti], row, time_col);
        if (!(t > 0.0) || !std::isfinite(t))
            throw NonPositiveTime("row " + std::to_string(row) + ": time " + fields[ti]);
        const double ev = parse_double(fields[ei], row, event_col);
        if (ev != 0.0 && ev != 1.0)
            throw BadEventFlag("row " + std::to_string(row) + ": event '" + fields[ei] + "'");
        ds.times.push_back(t);
        ds.events.push_back(static_cast<int>(ev));
        if (gi) {
            const double gv = parse_double(fields[*gi], row, group_col);
            if (gv != 0.0 && gv != 1.0)
                throw ParseError("row " + std::to_string(row) + ": group flag '" + fields[*gi] +
                                 "' is not 0/1");
            ds.group.push_back(static_cast<int>(gv));
        }
        std::vector<double> xrow;
        xrow.reserve(feat_cols.size());
        for (std::size_t j : feat_cols) {
            if (is_missing(fields[j]))
                xrow.push_back(std::numeric_limits<double>::quiet_NaN());
            else
                xrow.push_back(parse_double(fields[j], row, header[j]));
        }
        ds.features.push_back(std::move(xrow));
    }
    if (ds.n() == 0) throw Error("no data rows in " + path);
    return ds;
}

Scaler fit_scaler(const SurvivalDataset& raw) {
    const std::size_t n = raw.n(), p = raw.p();
    Scaler sc;
    sc.min.assign(p, 0.0);
    sc.max.assign(p, 0.0);
    sc.impute.assign(p, 0.0);
    sc.categorical.assign(p, false);
    for (std::size_t j = 0; j < p; ++j) {
        std::vector<double> vals;
        for (std::size_t i = 0; i < n; ++i)
            if (!std::isnan(raw.features[i][j])) vals.push_back(raw.features[i][j]);
        if (vals.empty()) throw AllMissingColumn("column '" + raw.feature_names[j] + "'");

        std::set<double> distinct(vals.begin(), vals.end());
        sc.categorical[j] = distinct.size() <= 10;
        const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / double(vals.size());
        if (sc.categorical[j]) {
            std::map<double, std::size_t> counts;
            for (double v : vals) ++counts[v];
            double mode = vals[0];
            std::size_t best = 0, ties = 0;
            for (const auto& [v, cnt] : counts) {
                if (cnt > best) {
                    best = cnt;
                    mode = v;
                    ties = 1;
                } else if (cnt == best) {
                    ++ties;
                }
            }
            // no clear mode: impute the mean instead
            sc.impute[j] = (ties == 1) ? mode : mean;
        } else {
            sc.impute[j] = mean;
        }
        // min/max over observed values plus the imputed one
        double lo = *std::min_element(vals.begin(), vals.end());
        double hi = *std::max_element(vals.begin(), vals.end());
        sc.min[j] = std::min(lo, sc.impute[j]);
        sc.max[j] = std::max(hi, sc.impute[j]);
    }
    return sc;
}

SurvivalDataset apply_scaler(const SurvivalDataset& raw, const Scaler& sc) {
    SurvivalDataset out = raw;
    const std::size_t n = raw.n(), p = raw.p();
    for (std::size_t j = 0; j < p; ++j) {
        const double range = sc.max[j] - sc.min[j];
        for (std::size_t i = 0; i < n; ++i) {
            double v = out.features[i][j];
            if (std::isnan(v)) v = sc.impute[j];
            out.features[i][j] = (range > 0.0) ? (v - sc.min[j]) / range : 0.0;
        }
    }
    return out;
}

FoldPlan kfold(const SurvivalDataset& ds, int k, std::uint64_t seed) {
    const std::size_t n = ds.n();
    if (k < 2 || static_cast<std::size_t>(k) > n)
        throw TooFewRows("kfold: need 2 <= k <= N, got k=" + std::to_string(k) +
                         ", N=" + std::to_string(n));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.assign(n, 0);
    for (std::size_t r = 0; r < n; ++r)
        plan.assignments[idx[r]] = static_cast<int>(r % static_cast<std::size_t>(k));
    return plan;
}

std::vector<std::size_t> fold_indices(const FoldPlan& plan, int fold, bool in_fold) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < plan.assignments.size(); ++i)
        if ((plan.assignments[i] == fold) == in_fold) out.push_back(i);
    return out;
}

} // namespace sst
