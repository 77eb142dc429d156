#include <stdio.h>
#include <stdlib.h>

int main(void) {
    int *data = (int *)malloc(10 * sizeof(int));
    if (data == NULL) {
        return 1;
    }
    data[0] = 5;
    free(data);
    printf("%d\n", data[0]);
    return 0;
}
