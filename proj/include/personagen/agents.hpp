#pragma once

// Agent roles and the fixed proposal order. Five content agents own disjoint
// slices of the persona (per the responsibility mapping in validator.hpp);
// the validator role checks drafts and owns nothing.

#include <string>
#include <vector>

#include "personagen/validator.hpp"

namespace personagen {

enum class Role {
    Enrollment = 0,
    Academic = 1,
    Values = 2,
    SocialCreative = 3,
    MentalHealth = 4,
    Validator = 5,
};

inline constexpr int kContentRoleCount = 5;

inline const char* role_title(Role r) {
    switch (r) {
        case Role::Enrollment: return owner::kEnrollment;
        case Role::Academic: return owner::kAcademic;
        case Role::Values: return owner::kValues;
        case Role::SocialCreative: return owner::kSocialCreative;
        case Role::MentalHealth: return owner::kMentalHealth;
        case Role::Validator: return "Validator";
    }
    return "";
}

// Proposal order: downstream agents condition on upstream output, so the
// psychology-facing agents must see the academic tier.
inline const std::vector<Role>& content_role_order() {
    static const std::vector<Role> order = {Role::Enrollment, Role::Academic, Role::Values,
                                            Role::SocialCreative, Role::MentalHealth};
    return order;
}

inline const std::vector<std::string>& role_fields(Role r) {
    return agent_owned_fields(role_title(r));
}

// Owner string -> role, tolerating loose validator-emitted spellings.
inline std::optional<Role> role_from_owner(const std::string& owner_name) {
    for (Role r : content_role_order())
        if (owner_name == role_title(r)) return r;
    // loose matching on distinctive words
    const std::string v = to_lower(owner_name);
    if (v.find("enrollment") != std::string::npos || v.find("development") != std::string::npos)
        return Role::Enrollment;
    if (v.find("academic") != std::string::npos) return Role::Academic;
    if (v.find("values") != std::string::npos || v.find("personality") != std::string::npos)
        return Role::Values;
    if (v.find("creativ") != std::string::npos || v.find("social") != std::string::npos)
        return Role::SocialCreative;
    if (v.find("mental") != std::string::npos || v.find("health") != std::string::npos)
        return Role::MentalHealth;
    return std::nullopt;
}

}  // namespace personagen
