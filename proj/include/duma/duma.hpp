#pragma once

#include "duma/backends/backend.hpp"
#include "duma/backends/chat_split.hpp"
#include "duma/backends/http.hpp"
#include "duma/backends/scripted.hpp"
#include "duma/diagnostics.hpp"
#include "duma/error.hpp"
#include "duma/eval/aggregate.hpp"
#include "duma/eval/alignment.hpp"
#include "duma/eval/rubric.hpp"
#include "duma/fast_mind.hpp"
#include "duma/memory.hpp"
#include "duma/memory_store.hpp"
#include "duma/orchestrator/config.hpp"
#include "duma/orchestrator/engine.hpp"
#include "duma/orchestrator/events.hpp"
#include "duma/orchestrator/service.hpp"
#include "duma/protocol.hpp"
#include "duma/slow_mind.hpp"
#include "duma/text.hpp"
#include "duma/tools/builtin.hpp"
#include "duma/tools/registry.hpp"
