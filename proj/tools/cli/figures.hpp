#pragma once

// CSV schemas of the emitted figure data. Physical columns carry a unit
// suffix; dimensionless ones are named after the ratio they hold.

#include <ostream>
#include <string>
#include <vector>

#include "rydcat/core/csv.hpp"
#include "rydcat/core/error.hpp"

namespace rydcat::cli {

struct FigureSchema {
    std::string id;
    std::vector<std::string> columns;

    std::string header_line() const {
        std::string s;
        for (std::size_t i = 0; i < columns.size(); ++i) s += (i ? "," : "") + columns[i];
        return s;
    }

    static FigureSchema evolution() {
        return {"evolution", {"t_omega_c", "t_over_tauc", "initial_overlap", "jz_mean", "fisher_over_n", "fisher_db"}};
    }
    static FigureSchema husimi() { return {"husimi", {"theta_rad", "phi_rad", "husimi_q"}}; }
    static FigureSchema flow() { return {"flow", {"start_id", "t_omega_c", "theta_rad", "phi_rad"}}; }
    static FigureSchema fig2() {
        return {"fig2", {"lambda", "delta_theta_over_pi", "phi_c_rad", "fidelity", "fisher_over_n", "tau_c_omega_c"}};
    }
    /// fisher_db is the quantum Fisher information of the trajectory-averaged
    /// state; variance_fisher_db is 10 log10(4 Var(Jz) / N) of the same state.
    static FigureSchema fig3a() {
        return {"fig3a", {"t_over_tauc", "p_de", "fisher_db", "fisher_db_err", "variance_fisher_db", "mean_jumps"}};
    }
    static FigureSchema dressing() { return {"dressing", {"w", "expected_events", "qfi", "fisher_db"}}; }
    static FigureSchema thresholds() { return {"thresholds", {"n_atoms", "kappa", "qfi0_db", "events", "p_de", "p_dp"}}; }
    static FigureSchema catsize() {
        return {"catsize",
                {"principal_n", "environment", "n_max", "fisher_db", "tau_c_s", "omega_r_mhz", "detuning_mhz", "gamma_per_s",
                 "trap_diameter_um", "limit"}};
    }
    static FigureSchema fig5_spectrum() { return {"fig5_spectrum", {"r_um", "eigenvalue_mhz", "curve_id", "ambiguous"}}; }
    static FigureSchema fig5_fidelity() { return {"fig5_fidelity", {"r_um", "blockade_fidelity", "ee_weight", "at_crossing"}}; }
    static FigureSchema transfer() { return {"transfer", {"t_us", "phonons_right", "phonons_left"}}; }
};

/// Rows buffered against a schema; a width mismatch is a numeric failure.
class FigureTable {
  public:
    explicit FigureTable(FigureSchema s) : schema_(std::move(s)) {}

    void add(const std::vector<double>& values) {
        check(values.size());
        std::vector<std::string> cells;
        for (double v : values) cells.push_back(num(v));
        rows_.push_back(std::move(cells));
    }

    void add_raw(std::vector<std::string> cells) {
        check(cells.size());
        rows_.push_back(std::move(cells));
    }

    void write(std::ostream& os) const {
        CsvWriter w(os, schema_.columns);
        for (const auto& r : rows_) w.raw_row(r);
    }

    static std::string num(double v) { return CsvWriter::format(v); }

    const FigureSchema& schema() const { return schema_; }
    std::size_t size() const { return rows_.size(); }

  private:
    void check(std::size_t n) const {
        if (n != schema_.columns.size())
            throw NumericError("figure " + schema_.id + ": row of width " + std::to_string(n) + " does not match schema");
    }

    FigureSchema schema_;
    std::vector<std::vector<std::string>> rows_;
};

} // namespace rydcat::cli
