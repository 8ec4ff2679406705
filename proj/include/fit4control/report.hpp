#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fit4control/certification.hpp"
#include "fit4control/coupling.hpp"
#include "fit4control/domain.hpp"
#include "fit4control/galerkin.hpp"
#include "fit4control/ordering.hpp"
#include "fit4control/perturbation.hpp"

namespace fit4control {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "1.0.0";

/// Two-space indented JSON; doubles with 17 significant digits, non-finite
/// doubles as null.
std::string dump_json(const Json& value);

/// "%.17g"
std::string format_double(double v);

/// Writes through a temporary sibling file and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

Json to_json(const ComputationalDomain& domain);
Json to_json(const Potential& potential);
Json to_json(const ControlSet& controls);
Json to_json(const SpectralDecomposition& spectrum);
Json to_json(const ResonanceVerdict& verdict);
Json to_json(const CouplingMatrix& matrix);
Json to_json(const Connectivity& connectivity);
Json to_json(const FrequentConnectivity& table);
Json to_json(const Reordering& reordering);
Json to_json(const FitCheck& check);
Json to_json(const CertificationReport& report);
Json to_json(const HomotopyReport& report);
Json to_json(const BlowupReport& report);
Json to_json(const GenericityStats& stats);
Json to_json(const ControlSchedule& schedule);
Json to_json(const SearchResult& result);
Json to_json(const ConsecutiveCouplingTable& table);
Json to_json(std::span<const Complex> state);

/// One value per line.
std::string grid_csv(std::span<const double> values);
/// Columns node, phi_1..phi_N.
std::string eigenfunctions_csv(const SpectralDecomposition& spectrum);
std::string coupling_csv(const CouplingMatrix& matrix);
std::string connectivity_csv(const FrequentConnectivity& table);
std::string snake_csv(const std::vector<std::vector<int>>& points);
std::string homotopy_csv(const HomotopyReport& report);
std::string blowup_csv(const BlowupReport& report);
std::string genericity_csv(const GenericityStats& stats);
/// Columns t, |psi_1|^2 .. |psi_n|^2.
/// candidate,fidelity per improvement of the incumbent.
std::string search_trace_csv(const SearchResult& result);
std::string trajectory_csv(std::span<const double> times, const std::vector<ComplexVector>& states);

}  // namespace fit4control
