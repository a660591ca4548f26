#include "wsf/common.hpp"

#include <atomic>
#include <iostream>
#include <mutex>
#include <set>

namespace wsf {
namespace {

std::mutex warn_mutex;
std::atomic<void (*)(const std::string&)> warn_handler{nullptr};
std::mutex once_mutex;
std::set<std::string> seen_keys;

} // namespace

void warn(const std::string& message) {
    if (auto* handler = warn_handler.load()) {
        handler(message);
        return;
    }
    std::lock_guard lock(warn_mutex);
    std::cerr << "warning: " << message << '\n';
}

void warn_once(const std::string& key, const std::string& message) {
    {
        std::lock_guard lock(once_mutex);
        if (!seen_keys.insert(key).second) return;
    }
    warn(message + " (further occurrences suppressed)");
}

void set_warning_handler(void (*handler)(const std::string&)) { warn_handler.store(handler); }

} // namespace wsf
