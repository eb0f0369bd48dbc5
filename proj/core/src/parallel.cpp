#include "wuglab/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace wuglab {
namespace {

class Pool {
  public:
    static Pool& instance() {
        static Pool pool;
        return pool;
    }

    void resize(int n) {
        std::lock_guard<std::mutex> outer(api_mu_);
        stop_workers();
        threads_ = n < 1 ? 1 : n;
        start_workers();
    }

    int threads() {
        std::lock_guard<std::mutex> outer(api_mu_);
        return threads_;
    }

    void run(int n, const std::function<void(int, int)>& fn) {
        std::lock_guard<std::mutex> outer(api_mu_);
        int t = threads_;
        if (t <= 1 || n < 2) {
            fn(0, n);
            return;
        }
        int chunks = t < n ? t : n;
        int base = n / chunks, rem = n % chunks;
        {
            std::unique_lock<std::mutex> lk(mu_);
            job_fn_ = &fn;
            job_chunks_.clear();
            int begin = 0;
            for (int i = 0; i < chunks; ++i) {
                int len = base + (i < rem ? 1 : 0);
                job_chunks_.push_back({begin, begin + len});
                begin += len;
            }
            next_chunk_ = 0;
            pending_ = chunks;
            ++generation_;
        }
        cv_.notify_all();
        // The caller participates too, so a 1-worker pool still makes progress.
        work_loop_once();
        std::unique_lock<std::mutex> lk(mu_);
        done_cv_.wait(lk, [&] { return pending_ == 0; });
        job_fn_ = nullptr;
    }

  private:
    Pool() {
        threads_ = 1;
        if (const char* env = std::getenv("WUGLAB_THREADS")) {
            threads_ = std::atoi(env);
        } else {
            unsigned hw = std::thread::hardware_concurrency();
            threads_ = hw ? static_cast<int>(hw) : 1;
        }
        if (threads_ < 1) threads_ = 1;
        start_workers();
    }

    ~Pool() { stop_workers(); }

    void start_workers() {
        stopping_ = false;
        for (int i = 0; i < threads_ - 1; ++i) {
            workers_.emplace_back([this] {
                uint64_t seen = 0;
                for (;;) {
                    {
                        std::unique_lock<std::mutex> lk(mu_);
                        cv_.wait(lk, [&] { return stopping_ || generation_ != seen; });
                        if (stopping_) return;
                        seen = generation_;
                    }
                    work_loop_once();
                }
            });
        }
    }

    void stop_workers() {
        {
            std::lock_guard<std::mutex> lk(mu_);
            stopping_ = true;
        }
        cv_.notify_all();
        for (auto& w : workers_) w.join();
        workers_.clear();
    }

    void work_loop_once() {
        for (;;) {
            int idx;
            const std::function<void(int, int)>* fn;
            {
                std::lock_guard<std::mutex> lk(mu_);
                if (!job_fn_ || next_chunk_ >= static_cast<int>(job_chunks_.size())) return;
                idx = next_chunk_++;
                fn = job_fn_;
            }
            (*fn)(job_chunks_[idx].first, job_chunks_[idx].second);
            {
                std::lock_guard<std::mutex> lk(mu_);
                if (--pending_ == 0) done_cv_.notify_all();
            }
        }
    }

    std::mutex api_mu_;
    std::mutex mu_;
    std::condition_variable cv_, done_cv_;
    std::vector<std::thread> workers_;
    std::vector<std::pair<int, int>> job_chunks_;
    const std::function<void(int, int)>* job_fn_ = nullptr;
    int next_chunk_ = 0;
    int pending_ = 0;
    uint64_t generation_ = 0;
    bool stopping_ = false;
    int threads_ = 1;
};

} // namespace

void parallel_for(int n, const std::function<void(int, int)>& fn) {
    if (n <= 0) return;
    Pool::instance().run(n, fn);
}

void set_worker_threads(int n) { Pool::instance().resize(n); }

int worker_threads() { return Pool::instance().threads(); }

} // namespace wuglab
