#ifndef L2AI_H
#define L2AI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Length in bytes of every digest and session key crossing the boundary.
 */
#define L2AI_DIGEST_LEN 20

typedef enum L2aiStatus {
  L2AI_STATUS_OK = 0,
  L2AI_STATUS_NULL_POINTER = 1,
  L2AI_STATUS_INVALID_UTF8 = 2,
  L2AI_STATUS_INVALID_ARGUMENT = 3,
  L2AI_STATUS_UNKNOWN_USER = 4,
  L2AI_STATUS_NO_RESPONSE = 5,
  L2AI_STATUS_NO_SESSION_KEY = 6,
  L2AI_STATUS_INVALID_ROLE = 7,
  L2AI_STATUS_UNKNOWN_TOKEN = 8,
  L2AI_STATUS_LOCAL_VERIFY_FAILED = 9,
  L2AI_STATUS_STALE = 10,
  L2AI_STATUS_UNKNOWN_PRINCIPAL = 11,
  L2AI_STATUS_UNAUTHORIZED = 12,
  L2AI_STATUS_BAD_MAC = 13,
  L2AI_STATUS_NOT_FOUND = 14,
  L2AI_STATUS_MALFORMED = 15,
  L2AI_STATUS_LEDGER_ERROR = 16,
  L2AI_STATUS_SCENARIO_PARSE = 17,
  L2AI_STATUS_UNKNOWN_SUITE = 18,
  L2AI_STATUS_IO = 19,
  L2AI_STATUS_BUFFER_TOO_SMALL = 20,
  L2AI_STATUS_UNEXPECTED = 21,
  L2AI_STATUS_PANIC = 22,
} L2aiStatus;

/*
 The result of a scenario or suite run.
 */
typedef struct L2aiReport L2aiReport;

/*
 A simulated deployment: one server, any number of users, and the
 adversarial channel between them.
 */
typedef struct L2aiSim L2aiSim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Static, NUL-terminated name of a status code.
 */
const char *l2ai_status_str(enum L2aiStatus status);

/*
 Truncated SHA-256 of `len` bytes at `data`, written to `out`
 (`L2AI_DIGEST_LEN` bytes).

 # Safety
 `data` must point to `len` readable bytes (or be null with `len == 0`)
 and `out` to `L2AI_DIGEST_LEN` writable bytes.
 */
enum L2aiStatus l2ai_hash(const uint8_t *data, size_t len, uint8_t *out);

/*
 New simulation with default settings. Never returns null.
 */
struct L2aiSim *l2ai_sim_new(uint64_t seed);

/*
 New simulation with an explicit freshness window and per-hop delay,
 both in milliseconds.
 */
struct L2aiSim *l2ai_sim_new_with(uint64_t seed, uint64_t delta_t_ms, uint64_t base_delay_ms);

/*
 # Safety
 `sim` must come from `l2ai_sim_new*` and not have been freed. Null is
 ignored.
 */
void l2ai_sim_free(struct L2aiSim *sim);

/*
 Adds a user holding `role` (a role code such as `"D"` or `"SA"`).

 # Safety
 `sim` must be a live handle; `name` and `role` NUL-terminated strings.
 */
enum L2aiStatus l2ai_sim_add_user(struct L2aiSim *sim, const char *name, const char *role);

/*
 Sets the scope requested by subsequent logins, by name
 (for example `"read-patient-vitals"`).

 # Safety
 `sim` must be a live handle; `scope` a NUL-terminated string.
 */
enum L2aiStatus l2ai_sim_set_scope(struct L2aiSim *sim, const char *scope);

/*
 Runs registration for a known user through the channel.

 # Safety
 `sim` must be a live handle; `name` a NUL-terminated string.
 */
enum L2aiStatus l2ai_sim_register(struct L2aiSim *sim, const char *name);

/*
 Runs login and authentication for a known user. Returns
 `L2AI_STATUS_OK` once both sides hold the session key.

 # Safety
 `sim` must be a live handle; `name` a NUL-terminated string.
 */
enum L2aiStatus l2ai_sim_login(struct L2aiSim *sim, const char *name);

/*
 Replaces a known user's password and biometric template.

 # Safety
 `sim` must be a live handle; `name` a NUL-terminated string.
 */
enum L2aiStatus l2ai_sim_update_credentials(struct L2aiSim *sim, const char *name);

/*
 Rewrites a known user's authorization record. A null `role` keeps the
 current role and only rotates the record.

 # Safety
 `sim` must be a live handle; `name` a NUL-terminated string; `role`
 null or a NUL-terminated string.
 */
enum L2aiStatus l2ai_sim_update_authorization(struct L2aiSim *sim,
                                              const char *name,
                                              const char *role);

/*
 Writes the user's current session key (`L2AI_DIGEST_LEN` bytes).

 # Safety
 `sim` must be a live handle; `name` a NUL-terminated string; `out`
 must hold `L2AI_DIGEST_LEN` bytes.
 */
enum L2aiStatus l2ai_sim_session_key(struct L2aiSim *sim, const char *name, uint8_t *out);

/*
 True when user and server hold the same session key for `name`.
 False for invalid arguments.

 # Safety
 `sim` must be null or a live handle; `name` null or a NUL-terminated
 string.
 */
bool l2ai_sim_keys_match(const struct L2aiSim *sim, const char *name);

/*
 Delivers everything in flight, then advances the clock by `ms`.

 # Safety
 `sim` must be a live handle.
 */
enum L2aiStatus l2ai_sim_wait(struct L2aiSim *sim, uint64_t ms);

/*
 Current simulated time in milliseconds, or 0 for a null handle.

 # Safety
 `sim` must be null or a live handle.
 */
uint64_t l2ai_sim_now(const struct L2aiSim *sim);

/*
 Sequence number the next message on the channel will carry, or 0 for a
 null handle.

 # Safety
 `sim` must be null or a live handle.
 */
uint64_t l2ai_sim_next_seq(const struct L2aiSim *sim);

/*
 Drops the message with sequence number `seq` when it is sent.

 # Safety
 `sim` must be a live handle.
 */
enum L2aiStatus l2ai_sim_drop(struct L2aiSim *sim, uint64_t seq);

/*
 Adds `extra_ms` of delay to the message with sequence number `seq`.

 # Safety
 `sim` must be a live handle.
 */
enum L2aiStatus l2ai_sim_delay(struct L2aiSim *sim, uint64_t seq, uint64_t extra_ms);

/*
 XORs `mask` into byte `offset` of the message with sequence number
 `seq`.

 # Safety
 `sim` must be a live handle.
 */
enum L2aiStatus l2ai_sim_modify(struct L2aiSim *sim, uint64_t seq, size_t offset, uint8_t mask);

/*
 Captures the message with sequence number `seq` and re-delivers a copy
 at simulated time `at_ms`.

 # Safety
 `sim` must be a live handle.
 */
enum L2aiStatus l2ai_sim_replay(struct L2aiSim *sim, uint64_t seq, uint64_t at_ms);

/*
 Copies the channel event log, one event per line.

 # Safety
 `sim` must be a live handle; `buf` must hold `cap` bytes; `needed` may
 be null.
 */
enum L2aiStatus l2ai_sim_event_log(const struct L2aiSim *sim,
                                   char *buf,
                                   size_t cap,
                                   size_t *needed);

/*
 Parses and runs scenario text with the given seed. On success `*out`
 receives a report handle.

 # Safety
 `scenario` must be a NUL-terminated string and `out` a writable pointer.
 */
enum L2aiStatus l2ai_run_scenario(const char *scenario, uint64_t seed, struct L2aiReport **out);

/*
 Runs a built-in suite (`honest`, `attacks`, `metrics` or `fuzz`) from
 the given base seed. On success `*out` receives a report handle.

 # Safety
 `name` must be a NUL-terminated string and `out` a writable pointer.
 */
enum L2aiStatus l2ai_run_suite(const char *name, uint64_t seed, struct L2aiReport **out);

/*
 True when every assertion in the report passed. False for null.

 # Safety
 `report` must be null or a live handle.
 */
bool l2ai_report_passed(const struct L2aiReport *report);

/*
 Number of failed assertions, or 0 for null.

 # Safety
 `report` must be null or a live handle.
 */
size_t l2ai_report_failures(const struct L2aiReport *report);

/*
 Copies the rendered text report.

 # Safety
 `report` must be a live handle; `buf` must hold `cap` bytes; `needed`
 may be null.
 */
enum L2aiStatus l2ai_report_render(const struct L2aiReport *report,
                                   char *buf,
                                   size_t cap,
                                   size_t *needed);

/*
 # Safety
 `report` must come from `l2ai_run_*` and not have been freed. Null is
 ignored.
 */
void l2ai_report_free(struct L2aiReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* L2AI_H */
