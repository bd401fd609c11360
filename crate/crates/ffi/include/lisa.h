#ifndef LISA_H
#define LISA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum LisaStatus {
  LISA_STATUS_OK = 0,
  LISA_STATUS_NULL_POINTER = 1,
  LISA_STATUS_INVALID_ARGUMENT = 2,
  LISA_STATUS_IO = 3,
  LISA_STATUS_FORMAT = 4,
  LISA_STATUS_TOO_SHORT = 5,
  LISA_STATUS_SESSION_CLOSED = 6,
  LISA_STATUS_BUFFER_TOO_SMALL = 7,
  LISA_STATUS_NON_FINITE = 8,
  LISA_STATUS_PANIC = 9,
} LisaStatus;

// Trained (or freshly initialized) model weights. Read-only once created;
// one model may back any number of sessions on any threads.
typedef struct LisaModel LisaModel;

// Streaming session. Keeps its own reference to the model, so the model
// handle may be freed first. Not thread-safe.
typedef struct LisaStream LisaStream;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Loads a checkpoint file. On success `*out` receives a new model.
//
// # Safety
// `path` must be a nul-terminated string and `out` a valid pointer.
enum LisaStatus lisa_model_load(const char *path, struct LisaModel **out);

// Creates an untrained model with the default architecture.
//
// # Safety
// `out` must be a valid pointer.
enum LisaStatus lisa_model_init(uint64_t seed, struct LisaModel **out);

// # Safety
// `model` must come from `lisa_model_load`/`lisa_model_init` and not have
// been freed. Null is ignored.
void lisa_model_free(struct LisaModel *model);

// Total number of trainable parameters; 0 for a null model.
//
// # Safety
// `model` must be null or a live model.
size_t lisa_model_parameter_count(const struct LisaModel *model);

// Input samples the model looks ahead of each output (the streaming
// latency in input periods); 0 for a null model.
//
// # Safety
// `model` must be null or a live model.
size_t lisa_model_lookahead(const struct LisaModel *model);

// Number of samples `lisa_upsample` produces for `input_len` samples.
// Returns 0 for invalid rates.
size_t lisa_output_length(size_t input_len, double rate_in, double rate_out);

// Super-resolves a whole signal. `output` needs room for
// `lisa_output_length(len, rate_in, rate_out)` samples.
//
// # Safety
// `input` must point to `len` floats, `output` to `capacity` writable
// floats, and `written` must be valid.
enum LisaStatus lisa_upsample(const struct LisaModel *model,
                              const float *input,
                              size_t len,
                              double rate_in,
                              double rate_out,
                              float *output,
                              size_t capacity,
                              size_t *written);

// Opens a streaming session converting `rate_in` to `rate_out`.
//
// # Safety
// `model` must be a live model and `out` a valid pointer.
enum LisaStatus lisa_stream_new(const struct LisaModel *model,
                                double rate_in,
                                double rate_out,
                                struct LisaStream **out);

// Capacity that guarantees the next push of `len` samples (or, with
// `len == 0`, the close) fits; 0 for null.
//
// # Safety
// `stream` must be null or a live session.
size_t lisa_stream_max_output(const struct LisaStream *stream, size_t len);

// Feeds `len` input samples and writes every output that became
// computable. If `capacity` is below `lisa_stream_max_output(stream, len)`
// nothing is consumed.
//
// # Safety
// `stream` must be a live session, `samples` must point to `len` floats,
// `output` to `capacity` writable floats, and `written` must be valid.
enum LisaStatus lisa_stream_push(struct LisaStream *stream,
                                 const float *samples,
                                 size_t len,
                                 float *output,
                                 size_t capacity,
                                 size_t *written);

// Ends the input and writes the remaining outputs.
//
// # Safety
// As for [`lisa_stream_push`].
enum LisaStatus lisa_stream_close(struct LisaStream *stream,
                                  float *output,
                                  size_t capacity,
                                  size_t *written);

// Input samples accepted so far; 0 for null.
//
// # Safety
// `stream` must be null or a live session.
size_t lisa_stream_pushed(const struct LisaStream *stream);

// Output samples emitted so far; 0 for null.
//
// # Safety
// `stream` must be null or a live session.
size_t lisa_stream_emitted(const struct LisaStream *stream);

// # Safety
// `stream` must come from `lisa_stream_new` and not have been freed.
// Null is ignored.
void lisa_stream_free(struct LisaStream *stream);

// Description of the last failure on the calling thread, or an empty
// string. Valid until the next `lisa_*` call on this thread.
const char *lisa_last_error_message(void);

// Static name of a status code.
const char *lisa_status_string(enum LisaStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LISA_H */
