#include <iostream>
using namespace std;

void f1() {
    int result = (100/0);
    cout << result << endl;
}

int main(int argc, char * argv[]) {
    f1();
    return 0;
}
