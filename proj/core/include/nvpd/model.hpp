#pragma once

#include <array>
#include <string>
#include <vector>

namespace nvpd {

struct RateSet {
    double k1 = 0, k2 = 0, k3 = 0, k4 = 0, k5 = 0, k6 = 0;
    double kMW = 0;
    double ion1 = 0, ion2 = 0, ion3 = 0, ion4 = 0;
    double rec1 = 0, rec2 = 0, rec3 = 0, rec4 = 0, rec5 = 0, rec6 = 0;
    double branch_A = 0, branch_B = 0, branch_C = 0, branch_D = 0, branch_E = 0;

    bool operator==(const RateSet&) const = default;
};

// Per-mW pumping coefficients; ion1 follows k1 through a fixed ratio.
struct OpticalPumping {
    double W_k1 = 0;
    double W_ion1_ratio = 0.25;
    double W_ion2 = 0, W_ion3 = 0, W_ion4 = 0;

    bool operator==(const OpticalPumping&) const = default;
};

struct RatePreset {
    std::string name;         // "tetienne" | "wirtitsch" | "custom"
    RateSet base;             // photon-driven fields ignored; kMW is the MW-on mixing rate
    OpticalPumping pumping;
    std::string provenance;

    bool operator==(const RatePreset&) const = default;
};

struct TransportParams {
    double mu_e = 1000;                          // cm^2/(V s)
    double mu_h = 1000;                          // cm^2/(V s)
    double field_E = 0;                          // V/cm, signed; >0 pushes electrons toward bin 0
    double electron_charge = 1.602176634e-19;    // C
    double gap = 5;                              // um

    bool operator==(const TransportParams&) const = default;
};

enum class DefectKind { NV, Ns, X };

struct Placement {
    int bin = 0;
    DefectKind kind = DefectKind::NV;
    int count = 1;
    bool operator==(const Placement&) const = default;
};

struct BinDefects {
    int n_NV = 0, n_Ns = 0, n_X = 0;
    bool operator==(const BinDefects&) const = default;
};

struct Mesh {
    int n_bins = 1;
    double bin_width = 0;   // um
    std::vector<BinDefects> bins;
    TransportParams transport;

    bool operator==(const Mesh&) const = default;
};

// How the valence-band reservoir is seeded in bins that hold N_s.
enum class PvbConvention {
    SingleReservoir,   // pVB = 0.5 whenever the bin holds any N_s
    HoleCountPerNs     // hole content 0.5 per N_s, clamped so pVB >= 0
};

struct BinState {
    static constexpr int kLevels = 10;
    // p1..p6 NV levels, p7 X occupancy, p8 Ns0 occupancy
    std::array<double, 8> p{};
    double pCB = 0;
    double pVB = 1;

    double nv_minus() const { return p[0] + p[1] + p[2] + p[3] + p[4]; }
    bool operator==(const BinState&) const = default;
};

enum class PhotocurrentMode { Analytic, Transport };

struct SimConfig {
    RatePreset preset;
    Mesh mesh;
    double laser_power = 1.0;     // mW
    bool mw_on = false;
    double rtol = 1e-6;
    double atol = 1e-10;
    double steady_threshold = 1e-6;
    double max_time = 1e-3;       // s
    PhotocurrentMode photocurrent_mode = PhotocurrentMode::Transport;

    // NV0 back-transfer restores only rec1*p1 (not conserving unless D = 1, E = 0).
    bool strict_literal_equations = false;
    PvbConvention pvb_convention = PvbConvention::SingleReservoir;
    double x_initial_occupancy = 0.0;

    bool operator==(const SimConfig&) const = default;
};

RateSet build_rate_set(const RatePreset& preset, double laser_power_mW, bool mw_on);

Mesh build_mesh(double gap_um, int n_bins, const std::vector<Placement>& placements,
                const TransportParams& transport);

struct MeshState;
MeshState initial_state(const Mesh& mesh, PvbConvention convention = PvbConvention::SingleReservoir,
                        double x_occupancy = 0.0);

// Returns every violated invariant; empty when the config is valid.
std::vector<std::string> config_diagnostics(const SimConfig& config);
std::vector<std::string> rate_set_diagnostics(const RateSet& r);

// Throws ValidationError carrying all diagnostics when invalid.
const SimConfig& validate_config(const SimConfig& config);

const char* to_string(DefectKind k);
const char* to_string(PhotocurrentMode m);
const char* to_string(PvbConvention c);

} // namespace nvpd
