#pragma once

#include "regmpoc.hpp"

#include <map>
#include <string>
#include <vector>

namespace ccopt {

/// Stationary points of one instance, as found by an enumeration oracle.
struct CensusReport {
    std::string instance_id;
    std::string method;
    bool has_m = false;
    bool has_t = false;
    bool m_complete = false;
    bool t_complete = false;
    std::vector<MCertificate> m_points;
    std::vector<TCertificate> t_points;
    std::map<int, int> m_by_index;  // nondegenerate points per M-index
    std::map<int, int> t_by_index;  // nondegenerate points per T-index
    int m_degenerate = 0;
    int t_degenerate = 0;
    std::vector<std::string> log;

    bool complete() const { return (!has_m || m_complete) && (!has_t || t_complete); }

    void tally() {
        m_by_index.clear();
        t_by_index.clear();
        m_degenerate = t_degenerate = 0;
        for (const auto& c : m_points) {
            if (c.m_index) ++m_by_index[*c.m_index];
            else ++m_degenerate;
        }
        for (const auto& c : t_points) {
            if (c.nondegenerate() && c.t_index) ++t_by_index[*c.t_index];
            else ++t_degenerate;
        }
    }
};

inline double inf_distance(const Vector& a, const Vector& b) {
    return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

inline bool lex_less(const Vector& a, const Vector& b) {
    for (Eigen::Index i = 0; i < std::min(a.size(), b.size()); ++i)
        if (a(i) != b(i)) return a(i) < b(i);
    return a.size() < b.size();
}

}  // namespace ccopt
