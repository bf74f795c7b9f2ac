#ifndef FIELDCAM_FIELDCAM_H
#define FIELDCAM_FIELDCAM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FC_API __declspec(dllexport)
#else
#define FC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fc_status {
  FC_OK = 0,
  FC_ERR_INVALID_ARGUMENT,
  FC_ERR_EMPTY_FILE,
  FC_ERR_UNPADDED_INPUT,
  FC_ERR_INVALID_ENCODING,
  FC_ERR_TOO_SHORT,
  FC_ERR_EXCEEDS_MODEM_LIMIT,
  FC_ERR_MALFORMED_HEADER,
  FC_ERR_MALFORMED_PACKET,
  FC_ERR_LENGTH_OVERFLOW,
  FC_ERR_PROTOCOL_VIOLATION,
  FC_ERR_ALREADY_POWERED,
  FC_ERR_POWERED_OFF,
  FC_ERR_CAPTURE_FAILED,
  FC_ERR_INCONSISTENT_TOTALS,
  FC_ERR_DIVISION_BY_ZERO,
  FC_ERR_AUTH_FAILED,
  FC_ERR_NOT_FOUND,
  FC_ERR_CONFLICT,
  FC_ERR_IO,
  FC_ERR_CONFIG,
  FC_ERR_NETWORK,
  FC_ERR_INTERNAL
} fc_status;

/* Stable lower-case name, e.g. "auth_failed". */
FC_API const char* fc_status_name(fc_status status);
/* Message for the last failing call on this thread; "" after success. */
FC_API const char* fc_last_error(void);

/* Strings and buffers returned through out-parameters are owned by the
   caller and released with fc_free. */
FC_API void fc_free(void* p);

/* ---- configuration ---- */

typedef struct fc_config fc_config;

FC_API fc_status fc_config_new(fc_config** out);
/* Loads a JSON config file. NULL path gives the defaults. Either way,
   FIELDCAM_AES_KEY and FIELDCAM_PASSWORD are applied when set. */
FC_API fc_status fc_config_load(const char* path, fc_config** out);
FC_API void fc_config_free(fc_config* cfg);
FC_API fc_status fc_config_set_key_hex(fc_config* cfg, const char* hex);
FC_API fc_status fc_config_set_fixture(fc_config* cfg, const char* path);
FC_API fc_status fc_config_set_storage_dir(fc_config* cfg, const char* dir);
FC_API fc_status fc_config_set_password(fc_config* cfg, const char* password);
FC_API fc_status fc_config_set_broker(fc_config* cfg, const char* host, uint16_t port);
FC_API fc_status fc_config_set_http(fc_config* cfg, const char* host, uint16_t port);
FC_API fc_status fc_config_set_qos(fc_config* cfg, int qos);
FC_API fc_status fc_config_set_seed(fc_config* cfg, uint64_t seed);
FC_API fc_status fc_config_set_loss(fc_config* cfg, double drop_probability);
FC_API fc_status fc_config_get_seed(const fc_config* cfg, uint64_t* out);
FC_API fc_status fc_config_to_json(const fc_config* cfg, char** out);

/* ---- pipeline ---- */

/* Base64 text of the AES-128-ECB ciphertext of the zero-padded input. */
FC_API fc_status fc_encode(const fc_config* cfg, const uint8_t* raw, size_t raw_len, char** out,
                           size_t* out_len);
/* Inverse of fc_encode; the output keeps the zero padding. */
FC_API fc_status fc_decode(const fc_config* cfg, const char* encoded, size_t encoded_len,
                           uint8_t** out, size_t* out_len);

/* ---- reports ---- */

/* kind is "energy", "usage" or "timing". */
FC_API fc_status fc_report(const fc_config* cfg, const char* kind, int as_json, char** out);

/* ---- virtual-clock simulation ---- */

typedef struct fc_sim fc_sim;

typedef struct fc_sim_result {
  int success;
  size_t raw_size;
  size_t encoded_size;
  size_t publishes;
  size_t segment_count;
  size_t segment_size;
  size_t last_segment_size;
  double pre_upload_ms;
  double upload_ms;
  double publish_wait_ms;
  double payload_serial_ms;
  double total_ms;
  double charge_coulombs;
  uint64_t record_id; /* receiver record created by this cycle, 0 if none */
  char failure[160]; /* NUL-terminated, empty on success */
} fc_sim_result;

FC_API fc_status fc_sim_new(const fc_config* cfg, fc_sim** out);
FC_API void fc_sim_free(fc_sim* sim);
/* One capture-and-upload cycle. A failed run is FC_OK with success = 0. */
FC_API fc_status fc_sim_transmit(fc_sim* sim, fc_sim_result* out);
/* Event log, serial transcript and phase report of the last cycle. */
FC_API fc_status fc_sim_log(const fc_sim* sim, char** out);
FC_API fc_status fc_sim_transcript(const fc_sim* sim, char** out);
FC_API fc_status fc_sim_timing(const fc_sim* sim, int as_json, char** out);
/* Receiver records as a JSON array. */
FC_API fc_status fc_sim_records(const fc_sim* sim, char** out);
FC_API fc_status fc_sim_decode(fc_sim* sim, uint64_t id, const char* password, char** out_path);

/* ---- live TCP mode ---- */

typedef struct fc_broker fc_broker;

/* Port 0 binds an ephemeral port. */
FC_API fc_status fc_broker_start(const char* host, uint16_t port, fc_broker** out);
FC_API uint16_t fc_broker_port(const fc_broker* broker);
FC_API void fc_broker_stop(fc_broker* broker);

typedef struct fc_receiver fc_receiver;

/* Connects to the configured broker and serves the HTTP API. */
FC_API fc_status fc_receiver_start(const fc_config* cfg, fc_receiver** out);
FC_API uint16_t fc_receiver_http_port(const fc_receiver* receiver);
FC_API int fc_receiver_wait_subscribed(fc_receiver* receiver, uint32_t timeout_ms);
FC_API uint64_t fc_receiver_messages(const fc_receiver* receiver);
FC_API fc_status fc_receiver_records(const fc_receiver* receiver, char** out);
FC_API void fc_receiver_stop(fc_receiver* receiver);

/* Encodes the file and publishes it to the configured broker. */
FC_API fc_status fc_send_file(const fc_config* cfg, const char* path, size_t* out_publishes);

/* Decodes a stored record from the configured storage directory. */
FC_API fc_status fc_store_decode(const fc_config* cfg, uint64_t id, const char* password,
                                 char** out_path);
FC_API fc_status fc_store_records(const fc_config* cfg, char** out);

#ifdef __cplusplus
}
#endif

#endif
