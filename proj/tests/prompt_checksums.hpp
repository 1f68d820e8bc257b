#pragma once

#include <cstdint>
#include <map>
#include <string>

// Pinned FNV-1a checksums of every shipped prompt resource. A mismatch means
// the templates drifted from what the experiments were calibrated against.
inline const std::map<std::string, std::uint64_t> kFrozenPromptChecksums = {
    {"correction_step", 0x78c844081677acdbULL},
    {"equation_gen_system", 0xc18f9c8df18e83a3ULL},
    {"equation_gen_user", 0x239e24386ab5ea29ULL},
    {"no_correction_step", 0xad37cfe8a8b19f45ULL},
    {"system_inst_corr", 0x6ee3f877f6ecf2c7ULL},
    {"system_inst_fllw", 0xc290c188e0b268f8ULL},
    {"system_misinformed", 0x3cc8923fd76372e3ULL},
    {"system_original", 0xeed92a35237bbb3dULL},
    {"user_original", 0x5ba0c1b524372a5fULL},
    {"user_with_equations", 0xa46d7bba4672e0e3ULL},
    {"verifier_existence", 0xb1762277ea8dc842ULL},
    {"verifier_factuality", 0x9387782099ae1c60ULL},
    {"verifier_following", 0xb31680cf6662ff9aULL},
    {"verifier_position", 0x58f220ad2defe3ebULL},
};
