/* Exercises the public API from plain C. */
#define _POSIX_C_SOURCE 200809L

#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <time.h>

#include "fieldcam/fieldcam.h"

static int failures = 0;

#define CHECK(cond)                                                  \
  do {                                                               \
    if (!(cond)) {                                                   \
      fprintf(stderr, "%s:%d: CHECK(%s) failed\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                    \
    }                                                                \
  } while (0)

#define CHECK_OK(expr)                                                        \
  do {                                                                        \
    fc_status st_ = (expr);                                                   \
    if (st_ != FC_OK) {                                                       \
      fprintf(stderr, "%s:%d: %s -> %s: %s\n", __FILE__, __LINE__, #expr,     \
              fc_status_name(st_), fc_last_error());                          \
      ++failures;                                                             \
    }                                                                         \
  } while (0)

static const char* kKey = "000102030405060708090a0b0c0d0e0f";

static void sleep_ms(long ms) {
  struct timespec ts = {ms / 1000, (ms % 1000) * 1000000L};
  nanosleep(&ts, NULL);
}

static fc_config* make_config(const char* store) {
  fc_config* cfg = NULL;
  CHECK_OK(fc_config_new(&cfg));
  CHECK_OK(fc_config_set_key_hex(cfg, kKey));
  CHECK_OK(fc_config_set_fixture(cfg, FIELDCAM_DATA_DIR "/fixture_640x480.jpg"));
  CHECK_OK(fc_config_set_storage_dir(cfg, store));
  CHECK_OK(fc_config_set_password(cfg, "hunter2"));
  return cfg;
}

static void test_errors(void) {
  fc_config* cfg = NULL;
  CHECK(strcmp(fc_status_name(FC_OK), "ok") == 0);
  CHECK(strcmp(fc_status_name(FC_ERR_AUTH_FAILED), "auth_failed") == 0);
  CHECK(strcmp(fc_status_name(FC_ERR_NETWORK), "network") == 0);
  CHECK(strcmp(fc_status_name((fc_status)999), "unknown") == 0);
  CHECK(fc_config_new(NULL) == FC_ERR_INVALID_ARGUMENT);
  CHECK(strlen(fc_last_error()) > 0);
  CHECK_OK(fc_config_new(&cfg));
  CHECK(strlen(fc_last_error()) == 0);
  CHECK(fc_config_set_key_hex(cfg, "xyz") == FC_ERR_INVALID_ARGUMENT);
  CHECK(fc_config_set_qos(cfg, 3) == FC_ERR_INVALID_ARGUMENT);
  CHECK(fc_config_set_loss(cfg, 1.0) == FC_ERR_INVALID_ARGUMENT);
  CHECK(fc_config_load("/nonexistent/fieldcam.json", NULL) == FC_ERR_INVALID_ARGUMENT);
  {
    fc_config* other = NULL;
    CHECK(fc_config_load("/nonexistent/fieldcam.json", &other) == FC_ERR_IO);
    CHECK(other == NULL);
  }
  {
    char* text = NULL;
    uint8_t raw[1] = {0};
    CHECK(fc_encode(cfg, raw, 1, &text, NULL) == FC_ERR_CONFIG);
    CHECK(fc_report(cfg, "bogus", 0, &text) == FC_ERR_INVALID_ARGUMENT);
  }
  fc_config_free(cfg);
  fc_config_free(NULL);
}

static void test_pipeline(void) {
  fc_config* cfg = NULL;
  uint8_t raw[37];
  char* encoded = NULL;
  size_t encoded_len = 0;
  uint8_t* plain = NULL;
  size_t plain_len = 0;
  size_t i;
  for (i = 0; i < sizeof raw; ++i) raw[i] = (uint8_t)(i * 7 + 1);
  CHECK_OK(fc_config_new(&cfg));
  CHECK_OK(fc_config_set_key_hex(cfg, kKey));
  CHECK_OK(fc_encode(cfg, raw, sizeof raw, &encoded, &encoded_len));
  CHECK(encoded_len == 64); /* 48 cipher bytes */
  CHECK(strlen(encoded) == encoded_len);
  CHECK_OK(fc_decode(cfg, encoded, encoded_len, &plain, &plain_len));
  CHECK(plain_len == 48);
  CHECK(memcmp(plain, raw, sizeof raw) == 0);
  for (i = sizeof raw; i < plain_len; ++i) CHECK(plain[i] == 0);
  CHECK(fc_encode(cfg, raw, 0, &encoded, &encoded_len) == FC_ERR_EMPTY_FILE);
  CHECK(fc_decode(cfg, "@@@@", 4, &plain, &plain_len) == FC_ERR_INVALID_ENCODING);
  fc_free(encoded);
  fc_free(plain);
  fc_config_free(cfg);
}

static void test_reports(void) {
  fc_config* cfg = NULL;
  char* text = NULL;
  CHECK_OK(fc_config_new(&cfg));
  CHECK_OK(fc_report(cfg, "energy", 0, &text));
  CHECK(strstr(text, "6.342 mA") != NULL);
  fc_free(text);
  CHECK_OK(fc_report(cfg, "usage", 1, &text));
  CHECK(strstr(text, "\"ratio_percent\": 87.46") != NULL);
  fc_free(text);
  CHECK_OK(fc_report(cfg, "timing", 1, &text));
  CHECK(strstr(text, "\"publish_wait_ms\": 7000,") != NULL);
  fc_free(text);
  CHECK_OK(fc_config_to_json(cfg, &text));
  CHECK(strstr(text, "\"qmtpub_wait_ms\": 500") != NULL);
  fc_free(text);
  fc_config_free(cfg);
}

static void test_simulation(const char* store) {
  fc_config* cfg = make_config(store);
  fc_sim* sim = NULL;
  fc_sim_result r;
  char* text = NULL;
  char* path = NULL;
  CHECK(fc_sim_log(NULL, &text) == FC_ERR_INVALID_ARGUMENT);
  CHECK_OK(fc_sim_new(cfg, &sim));
  CHECK(fc_sim_log(sim, &text) == FC_ERR_NOT_FOUND);
  CHECK_OK(fc_sim_transmit(sim, &r));
  CHECK(r.success == 1);
  CHECK(r.failure[0] == '\0');
  CHECK(r.record_id == 1);
  CHECK(r.raw_size == 13568);
  CHECK(r.encoded_size == 18093);
  CHECK(r.publishes == 14);
  CHECK(r.segment_count == 13);
  CHECK(r.last_segment_size == 93);
  CHECK(r.publish_wait_ms == 7000.0);
  CHECK(r.total_ms > 32000.0 && r.total_ms < 48000.0);
  CHECK(r.charge_coulombs > 0.19 * 30 && r.charge_coulombs < 0.19 * 48);
  CHECK_OK(fc_sim_transcript(sim, &text));
  CHECK(strstr(text, "AT+QMTPUB=5,0,0,0,\"testing\"") != NULL);
  fc_free(text);
  CHECK_OK(fc_sim_log(sim, &text));
  CHECK(strstr(text, "cellular_done") != NULL);
  fc_free(text);
  CHECK_OK(fc_sim_timing(sim, 1, &text));
  CHECK(strstr(text, "\"publishes\": 14") != NULL);
  fc_free(text);
  CHECK_OK(fc_sim_records(sim, &text));
  CHECK(strstr(text, "\"status\":\"stored\"") != NULL);
  fc_free(text);
  CHECK(fc_sim_decode(sim, 1, "nope", &path) == FC_ERR_AUTH_FAILED);
  CHECK(fc_sim_decode(sim, 42, "hunter2", &path) == FC_ERR_NOT_FOUND);
  CHECK_OK(fc_sim_decode(sim, 1, "hunter2", &path));
  CHECK(path != NULL && strstr(path, "1_image.jpg") != NULL);
  fc_free(path);
  CHECK(fc_sim_decode(sim, 1, "hunter2", &path) == FC_ERR_CONFLICT);
  fc_sim_free(sim);

  /* The store outlives the simulation. */
  CHECK_OK(fc_store_records(cfg, &text));
  CHECK(strstr(text, "\"status\":\"decoded\"") != NULL);
  fc_free(text);
  CHECK(fc_store_decode(cfg, 1, "hunter2", &path) == FC_ERR_CONFLICT);
  fc_config_free(cfg);
}

static void test_live(const char* store) {
  fc_config* cfg = make_config(store);
  fc_broker* broker = NULL;
  fc_receiver* receiver = NULL;
  size_t publishes = 0;
  int waited = 0;
  char* text = NULL;
  char* path = NULL;
  CHECK_OK(fc_broker_start("127.0.0.1", 0, &broker));
  CHECK(fc_broker_port(broker) != 0);
  CHECK_OK(fc_config_set_broker(cfg, "127.0.0.1", fc_broker_port(broker)));
  CHECK_OK(fc_config_set_http(cfg, "127.0.0.1", 0));
  CHECK_OK(fc_receiver_start(cfg, &receiver));
  CHECK(fc_receiver_wait_subscribed(receiver, 5000) == 1);
  CHECK(fc_receiver_http_port(receiver) != 0);
  CHECK_OK(fc_send_file(cfg, FIELDCAM_DATA_DIR "/fixture_640x480.jpg", &publishes));
  CHECK(publishes == 14);
  while (fc_receiver_messages(receiver) < 14 && waited < 5000) {
    sleep_ms(10);
    waited += 10;
  }
  CHECK(fc_receiver_messages(receiver) == 14);
  CHECK_OK(fc_receiver_records(receiver, &text));
  CHECK(strstr(text, "\"encoded_size\":18093") != NULL);
  fc_free(text);
  fc_receiver_stop(receiver);
  fc_broker_stop(broker);
  CHECK_OK(fc_store_decode(cfg, 1, "hunter2", &path));
  fc_free(path);
  CHECK(fc_send_file(cfg, "/nonexistent.jpg", &publishes) == FC_ERR_IO);
  fc_config_free(cfg);
}

int main(void) {
  char sim_store[] = "/tmp/fieldcam_capi_XXXXXX";
  char live_store[] = "/tmp/fieldcam_capi_XXXXXX";
  char cmd[128];
  if (!mkdtemp(sim_store) || !mkdtemp(live_store)) return 2;
  test_errors();
  test_pipeline();
  test_reports();
  test_simulation(sim_store);
  test_live(live_store);
  snprintf(cmd, sizeof cmd, "rm -rf %s %s", sim_store, live_store);
  if (system(cmd) != 0) ++failures;
  if (failures) {
    fprintf(stderr, "%d check(s) failed\n", failures);
    return 1;
  }
  printf("test_capi: all checks passed\n");
  return 0;
}
