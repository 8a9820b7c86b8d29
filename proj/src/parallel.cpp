#include "mqnmr/parallel.hpp"

#include <cstdlib>
#include <string>

namespace mqnmr {

int default_worker_count() {
    if (const char* env = std::getenv("MQNMR_WORKERS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) {
                return n;
            }
        } catch (const std::exception&) {
        }
    }
    return 1;
}

}  // namespace mqnmr
