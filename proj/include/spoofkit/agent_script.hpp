#pragma once

// Emits the injectable agent script for a plan. Every hook becomes one
// stanza bracketed by `// @hook <api> class=<token>` and `// @end <api>`;
// a single `// @restore` stanza detaches every installed interception.
// Constant property values are inlined; sensor samples arrive as messages.

#include <string>

#include "spoofkit/hookplan.hpp"

namespace spoofkit {

std::string emit_agent_script(const HookPlan& plan);

}  // namespace spoofkit
