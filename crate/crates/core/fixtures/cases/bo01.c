#include <stdio.h>
#include <string.h>

int global = 5;

void f1() {
    char * data;
    char dataBuffer1[50];
    char dataBuffer2[100];
    if(global==5) {
        data = dataBuffer1;
    }
    data[0] = '\0';
    char source[100];
    memset(source, 'C', 100-1);
    source[100-1] = '\0';
    strcpy(data, source);
}

int main(int argc, char * argv[]) {
    f1();
    return 0;
}
