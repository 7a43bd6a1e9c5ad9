/*
 * Generic TNNV driver for nn2c-generated models.
 *
 * Build against one model by defining its identifiers, e.g.:
 *
 *   gcc -std=c99 -pedantic -Wall -Wextra -Werror -O2 \
 *       -DMODEL_HEADER='"autoencoder_model.h"' \
 *       -DMODEL_INIT=autoencoder_init -DMODEL_RUN=autoencoder_run \
 *       -DMODEL_IN_SIZE=AUTOENCODER_IN_SIZE \
 *       -DMODEL_OUT_SIZE=AUTOENCODER_OUT_SIZE \
 *       -I gen harness.c gen/autoencoder_model.c gen/autoencoder_weights.c \
 *       -lm -o run_autoencoder
 *
 * Usage: run_model IN.tnnv OUT.tnnv [repeat]
 *
 * Reads float32 vectors from IN.tnnv, runs each through the model
 * (repeat times, keeping the last result), and writes the outputs to
 * OUT.tnnv followed by a u64 trailer holding the median inference time
 * in nanoseconds. Everything lives in static storage; the file format
 * is little-endian and so is every target this runs on.
 *
 * Exit codes: 0 ok, 1 unreadable or malformed file, 2 vector length
 * mismatch against the model, 3 init or run failure.
 */
#define _POSIX_C_SOURCE 199309L

#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <time.h>

#ifndef MODEL_HEADER
#error "define MODEL_HEADER, MODEL_INIT, MODEL_RUN, MODEL_IN_SIZE, MODEL_OUT_SIZE"
#endif
#include MODEL_HEADER

#define MAX_VECTORS 4096
#define MAX_REPEAT 1001

static float in_buf[MODEL_IN_SIZE];
static float out_buf[MODEL_OUT_SIZE];
static uint64_t vector_ns[MAX_VECTORS];
static uint64_t repeat_ns[MAX_REPEAT];

static uint64_t now_ns(void)
{
    struct timespec ts;
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return (uint64_t)ts.tv_sec * 1000000000u + (uint64_t)ts.tv_nsec;
}

static int cmp_u64(const void *a, const void *b)
{
    uint64_t x = *(const uint64_t *)a;
    uint64_t y = *(const uint64_t *)b;
    return x < y ? -1 : x > y ? 1 : 0;
}

/* Lower middle for even counts; exact middle for odd. */
static uint64_t median_u64(uint64_t *values, uint32_t n)
{
    if (n == 0) {
        return 0;
    }
    qsort(values, n, sizeof values[0], cmp_u64);
    return values[(n - 1) / 2];
}

static int read_exact(FILE *f, void *dst, size_t bytes)
{
    return fread(dst, 1, bytes, f) == bytes ? 0 : -1;
}

static int write_exact(FILE *f, const void *src, size_t bytes)
{
    return fwrite(src, 1, bytes, f) == bytes ? 0 : -1;
}

int main(int argc, char **argv)
{
    FILE *fin = NULL;
    FILE *fout = NULL;
    char magic[4];
    uint32_t count;
    uint32_t length;
    uint32_t out_length = (uint32_t)MODEL_OUT_SIZE;
    uint64_t median;
    long repeat = 1;
    uint32_t i;
    long r;

    if (argc < 3 || argc > 4) {
        fprintf(stderr, "usage: %s IN.tnnv OUT.tnnv [repeat]\n", argv[0]);
        return 1;
    }
    if (argc == 4) {
        repeat = strtol(argv[3], NULL, 10);
        if (repeat < 1 || repeat > MAX_REPEAT) {
            fprintf(stderr, "repeat must be in [1, %d]\n", MAX_REPEAT);
            return 1;
        }
    }

    fin = fopen(argv[1], "rb");
    if (fin == NULL) {
        fprintf(stderr, "cannot open %s\n", argv[1]);
        return 1;
    }
    if (read_exact(fin, magic, 4) != 0 || memcmp(magic, "TNNV", 4) != 0 ||
        read_exact(fin, &count, 4) != 0 || read_exact(fin, &length, 4) != 0) {
        fprintf(stderr, "%s is not a TNNV file\n", argv[1]);
        fclose(fin);
        return 1;
    }
    if (length != (uint32_t)MODEL_IN_SIZE) {
        fprintf(stderr, "vector length %u, model wants %u\n",
                length, (uint32_t)MODEL_IN_SIZE);
        fclose(fin);
        return 2;
    }
    if (count > MAX_VECTORS) {
        fprintf(stderr, "too many vectors for this driver (max %d)\n",
                MAX_VECTORS);
        fclose(fin);
        return 1;
    }

    if (MODEL_INIT() != 0) {
        fclose(fin);
        return 3;
    }

    fout = fopen(argv[2], "wb");
    if (fout == NULL) {
        fprintf(stderr, "cannot open %s\n", argv[2]);
        fclose(fin);
        return 1;
    }
    if (write_exact(fout, "TNNV", 4) != 0 ||
        write_exact(fout, &count, 4) != 0 ||
        write_exact(fout, &out_length, 4) != 0) {
        goto write_failure;
    }

    for (i = 0; i < count; i++) {
        if (read_exact(fin, in_buf, sizeof in_buf) != 0) {
            fprintf(stderr, "%s truncated at vector %u\n", argv[1], i);
            fclose(fin);
            fclose(fout);
            return 1;
        }
        for (r = 0; r < repeat; r++) {
            uint64_t start = now_ns();
            if (MODEL_RUN(in_buf, out_buf) != 0) {
                fclose(fin);
                fclose(fout);
                return 3;
            }
            repeat_ns[r] = now_ns() - start;
        }
        vector_ns[i] = median_u64(repeat_ns, (uint32_t)repeat);
        if (write_exact(fout, out_buf, sizeof out_buf) != 0) {
            goto write_failure;
        }
    }

    median = median_u64(vector_ns, count);
    if (write_exact(fout, &median, 8) != 0) {
        goto write_failure;
    }
    fclose(fin);
    if (fclose(fout) != 0) {
        return 1;
    }
    return 0;

write_failure:
    fprintf(stderr, "cannot write %s\n", argv[2]);
    fclose(fin);
    fclose(fout);
    return 1;
}
