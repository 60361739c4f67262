#include <stdio.h>
#include <string.h>

#include "l2ai.h"

static int check(L2aiStatus got, L2aiStatus want, const char *what) {
    if (got != want) {
        fprintf(stderr, "%s: got %s, want %s\n", what, l2ai_status_str(got), l2ai_status_str(want));
        return 1;
    }
    return 0;
}

int main(void) {
    int bad = 0;
    uint8_t key[L2AI_DIGEST_LEN];

    L2aiSim *sim = l2ai_sim_new(42);
    bad |= check(l2ai_sim_add_user(sim, "alice", "D"), L2AI_STATUS_OK, "add_user");
    bad |= check(l2ai_sim_register(sim, "alice"), L2AI_STATUS_OK, "register");
    bad |= check(l2ai_sim_login(sim, "alice"), L2AI_STATUS_OK, "login");
    bad |= check(l2ai_sim_session_key(sim, "alice", key), L2AI_STATUS_OK, "session_key");
    if (!l2ai_sim_keys_match(sim, "alice")) {
        fprintf(stderr, "keys differ\n");
        bad = 1;
    }

    uint64_t seq = l2ai_sim_next_seq(sim);
    bad |= check(l2ai_sim_modify(sim, seq, 8, 0x01), L2AI_STATUS_OK, "modify");
    bad |= check(l2ai_sim_login(sim, "alice"), L2AI_STATUS_BAD_MAC, "tampered login");
    l2ai_sim_free(sim);

    L2aiReport *report = NULL;
    bad |= check(l2ai_run_suite("metrics", 42, &report), L2AI_STATUS_OK, "suite");
    if (!l2ai_report_passed(report)) {
        fprintf(stderr, "metrics suite failed\n");
        bad = 1;
    }
    size_t needed = 0;
    bad |= check(l2ai_report_render(report, NULL, 0, &needed), L2AI_STATUS_BUFFER_TOO_SMALL, "render size");
    char text[8192];
    if (needed <= sizeof text) {
        bad |= check(l2ai_report_render(report, text, sizeof text, &needed), L2AI_STATUS_OK, "render");
        if (strstr(text, "result=pass") == NULL) {
            bad = 1;
        }
    }
    l2ai_report_free(report);

    printf("%s\n", bad ? "smoke: fail" : "smoke: ok");
    return bad;
}
